//! Invariant law of the limit diffusion and Wasserstein-1 distances to it.
//!
//! The invariant density is `p(x) ∝ f(x)⁻¹ exp(−(2α/σ²) G(x))` with
//! `G(x) = ∫₀ˣ y/f(y) dy`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hawkes;
use crate::limit::{simulate_em, LimitDiffusion};
use crate::model::{ModelSpec, RateFunction, RateKind};
use crate::quadrature::{integrate_panels, Tolerance};
use crate::rng::Streams;
use crate::stats::{replicate, try_replicate, McEstimate};

const NORMALISATION_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-12,
    max_depth: 60,
};
const TAIL_MASS: f64 = 1e-10;
const MAX_RADIUS: f64 = 1e9;
/// Half the number of cells of the tabulation grid.
const HALF_CELLS: usize = 20_000;
/// Points of the inverse-CDF table, excluding the endpoint.
pub const QUANTILE_POINTS: usize = 100_000;

/// Normalised invariant density with a tabulated CDF and quantile function.
#[derive(Debug, Clone)]
pub struct InvariantDensity {
    alpha: f64,
    sigma2: f64,
    rate: RateFunction,
    log_z: f64,
    radius: f64,
    grid_x: Vec<f64>,
    grid_p: Vec<f64>,
    grid_cdf: Vec<f64>,
    quantiles: Vec<f64>,
}

impl InvariantDensity {
    pub fn new(alpha: f64, sigma2: f64, rate: RateFunction) -> Result<Self> {
        if !(alpha > 0.0 && sigma2 > 0.0) {
            return Err(Error::InvalidParameter("alpha and sigma^2 must be positive".into()));
        }
        let k = 2.0 * alpha / sigma2;
        let unnorm = |x: f64| (-rate.eval(x).ln() - k * rate.antiderivative_ratio(x)).exp();

        let mut r = 8.0;
        let z = loop {
            let core = integrate_panels(unnorm, -r, r, NORMALISATION_TOL);
            let tail = integrate_panels(unnorm, r, 2.0 * r, NORMALISATION_TOL)
                + integrate_panels(unnorm, -2.0 * r, -r, NORMALISATION_TOL);
            if !(core.is_finite() && tail.is_finite()) || core <= 0.0 {
                return Err(Error::TailDivergence(format!("integral not finite on [-{r}, {r}]")));
            }
            if tail / (core + tail) < TAIL_MASS {
                r *= 2.0;
                break core + tail;
            }
            r *= 2.0;
            if r > MAX_RADIUS {
                return Err(Error::TailDivergence(format!("tail mass still {tail:e} at radius {r}")));
            }
        };
        let log_z = z.ln();

        // Tabulation on x = s·sinh(u), u uniform, resolving the unit-scale
        // core and the wide tails with the same number of points.
        let s = (sigma2 * rate.eval(0.0) / (2.0 * alpha)).sqrt().clamp(1e-3, 1e3);
        let umax = (r / s).asinh();
        let m = 2 * HALF_CELLS;
        let du = 2.0 * umax / m as f64;
        let us: Vec<f64> = (0..=m).map(|i| -umax + i as f64 * du).collect();
        let grid_x: Vec<f64> = us.iter().map(|&u| s * u.sinh()).collect();
        let jac: Vec<f64> = us.iter().map(|&u| s * u.cosh()).collect();
        let g = antiderivative_on_grid(&rate, &grid_x, &jac, du);
        let grid_p: Vec<f64> = grid_x
            .iter()
            .zip(&g)
            .map(|(&x, &gx)| (-rate.eval(x).ln() - k * gx - log_z).exp())
            .collect();

        // Composite Simpson in u over pairs of cells; odd nodes get the
        // three-point partial rule.
        let mut grid_cdf = vec![0.0; m + 1];
        let w = |i: usize| grid_p[i] * jac[i];
        for i in (0..m).step_by(2) {
            let (a, b, c) = (w(i), w(i + 1), w(i + 2));
            grid_cdf[i + 1] = grid_cdf[i] + du * (5.0 * a + 8.0 * b - c) / 12.0;
            grid_cdf[i + 2] = grid_cdf[i] + du * (a + 4.0 * b + c) / 3.0;
        }
        let total = grid_cdf[m];
        for c in &mut grid_cdf {
            *c /= total;
        }
        let quantiles = tabulate_quantiles(&grid_x, &grid_cdf);

        Ok(Self {
            alpha,
            sigma2,
            rate,
            log_z,
            radius: r,
            grid_x,
            grid_p,
            grid_cdf,
            quantiles,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.alpha, spec.sigma2(), spec.rate.clone())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.log_pdf_unnormalised(x) - self.log_z).exp()
    }

    pub fn log_pdf_unnormalised(&self, x: f64) -> f64 {
        -self.rate.eval(x).ln() - 2.0 * self.alpha / self.sigma2 * self.rate.antiderivative_ratio(x)
    }

    /// Normalising constant `Z = ∫ f⁻¹ e^{−(2α/σ²)G}`.
    pub fn normaliser(&self) -> f64 {
        self.log_z.exp()
    }

    /// Integration radius reached by the tail search.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `∫ φ p` by adaptive quadrature over the integration radius.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        integrate_panels(|x| phi(x) * self.pdf(x), -self.radius, self.radius, NORMALISATION_TOL)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid_x[0] {
            return 0.0;
        }
        if x >= *self.grid_x.last().unwrap() {
            return 1.0;
        }
        let i = self.grid_x.partition_point(|&g| g <= x) - 1;
        let t = (x - self.grid_x[i]) / (self.grid_x[i + 1] - self.grid_x[i]);
        self.grid_cdf[i] + t * (self.grid_cdf[i + 1] - self.grid_cdf[i])
    }

    /// Linear interpolation in the inverse-CDF table.
    pub fn quantile(&self, p: f64) -> f64 {
        let pos = p.clamp(0.0, 1.0) * QUANTILE_POINTS as f64;
        let i = (pos.floor() as usize).min(QUANTILE_POINTS - 1);
        let t = pos - i as f64;
        self.quantiles[i] + t * (self.quantiles[i + 1] - self.quantiles[i])
    }

    /// `(x, p(x))` on the tabulation grid.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid_x.iter().copied().zip(self.grid_p.iter().copied())
    }
}

fn antiderivative_on_grid(rate: &RateFunction, xs: &[f64], jac: &[f64], du: f64) -> Vec<f64> {
    match rate.kind() {
        RateKind::Quadratic | RateKind::RootQuadratic | RateKind::Constant(_) => {
            xs.iter().map(|&x| rate.antiderivative_ratio(x)).collect()
        }
        RateKind::ArctanSq | RateKind::UserDefined(_) => {
            // Cumulative Simpson in u outward from the centre node.
            let m = xs.len() - 1;
            let c = m / 2;
            let w: Vec<f64> = xs.iter().zip(jac).map(|(&x, &j)| x / rate.eval(x) * j).collect();
            let mut g = vec![0.0; m + 1];
            let mut i = c;
            while i + 2 <= m {
                g[i + 1] = g[i] + du * (5.0 * w[i] + 8.0 * w[i + 1] - w[i + 2]) / 12.0;
                g[i + 2] = g[i] + du * (w[i] + 4.0 * w[i + 1] + w[i + 2]) / 3.0;
                i += 2;
            }
            let mut i = c;
            while i >= 2 {
                g[i - 1] = g[i] - du * (5.0 * w[i] + 8.0 * w[i - 1] - w[i - 2]) / 12.0;
                g[i - 2] = g[i] - du * (w[i] + 4.0 * w[i - 1] + w[i - 2]) / 3.0;
                i -= 2;
            }
            g
        }
    }
}

fn tabulate_quantiles(xs: &[f64], cdf: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(QUANTILE_POINTS + 1);
    q.push(xs[0]);
    let mut i = 0;
    for j in 1..QUANTILE_POINTS {
        let p = j as f64 / QUANTILE_POINTS as f64;
        while cdf[i + 1] < p {
            i += 1;
        }
        let span = cdf[i + 1] - cdf[i];
        let t = if span > 0.0 { (p - cdf[i]) / span } else { 0.0 };
        q.push(xs[i] + t * (xs[i + 1] - xs[i]));
    }
    q.push(*xs.last().unwrap());
    q
}

/// Second argument of [`wasserstein1`].
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Samples(&'a [f64]),
    Density(&'a InvariantDensity),
}

/// Wasserstein-1 distance between an empirical law and a reference.
///
/// Sample vs sample: mean absolute difference of order statistics; when
/// sizes differ, the larger set is thinned to evenly spaced order
/// statistics. Sample vs density: `mean |x_(i) − q(i/(n+1))|`.
pub fn wasserstein1(samples: &[f64], reference: Reference<'_>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut a = samples.to_vec();
    a.sort_by(f64::total_cmp);
    match reference {
        Reference::Samples(other) => {
            if other.is_empty() {
                return Err(Error::EmptySamples);
            }
            let mut b = other.to_vec();
            b.sort_by(f64::total_cmp);
            let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
            let n = small.len();
            let m = large.len();
            let total: f64 = small
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let j = (((i as f64 + 0.5) * m as f64 / n as f64) as usize).min(m - 1);
                    (x - large[j]).abs()
                })
                .sum();
            Ok(total / n as f64)
        }
        Reference::Density(d) => Ok(w1_sorted_vs_density(&a, d)),
    }
}

fn w1_sorted_vs_density(sorted: &[f64], density: &InvariantDensity) -> f64 {
    let n = sorted.len();
    let total: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - density.quantile((i + 1) as f64 / (n + 1) as f64)).abs())
        .sum();
    total / n as f64
}

/// W₁ to a density with a bootstrap standard error.
pub fn wasserstein1_with_sem(
    samples: &[f64],
    density: &InvariantDensity,
    resamples: usize,
    streams: &Streams,
) -> Result<McEstimate> {
    let point = wasserstein1(samples, Reference::Density(density))?;
    let n = samples.len();
    let boot: Vec<f64> = replicate(resamples, |b| {
        let mut rng = streams.stream(b);
        let mut draw: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
        draw.sort_by(f64::total_cmp);
        w1_sorted_vs_density(&draw, density)
    });
    let spread = McEstimate::from_samples(&boot);
    Ok(McEstimate {
        mean: point,
        sem: spread.sem * (resamples as f64).sqrt(),
        reps: n,
    })
}

/// `reps` independent draws of `X^N_t` from the exact jump simulation.
pub fn long_run_law(spec: &ModelSpec, t: f64, reps: usize, streams: &Streams) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    try_replicate(reps, |r| hawkes::terminal_state(spec, t, &mut streams.stream(r)))
}

/// `reps` independent Euler–Maruyama draws of `X̄_t`.
pub fn long_run_limit(diff: &LimitDiffusion, t: f64, h: f64, reps: usize, streams: &Streams) -> Result<Vec<f64>> {
    try_replicate(reps, |r| {
        simulate_em(diff, t, h, &mut streams.stream(r)).map(|p| p.terminal())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(alpha: f64) -> InvariantDensity {
        InvariantDensity::new(alpha, 1.0, RateFunction::quadratic()).unwrap()
    }

    #[test]
    fn closed_form_quadratic_alpha_two() {
        let d = quadratic(2.0);
        let c = 8.0 / (3.0 * std::f64::consts::PI);
        for x in [-3.0f64, -0.5, 0.0, 0.25, 1.0, 4.0, 10.0] {
            let exact = c * (1.0 + x * x).powi(-3);
            assert!((d.pdf(x) - exact).abs() < 1e-8 * c, "x={x}");
        }
    }

    #[test]
    fn constant_rate_gives_gaussian() {
        let d = InvariantDensity::new(1.0, 1.0, RateFunction::constant(1.0).unwrap()).unwrap();
        let var = d.expect(|x| x * x);
        assert!((var - 0.5).abs() < 1e-8);
        // Median and quartile of N(0, 1/2).
        assert!(d.quantile(0.5).abs() < 1e-6);
        assert!((d.quantile(0.75) - 0.674_489_750_196_081_7 * 0.5f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn normalised_and_symmetric() {
        for d in [
            quadratic(2.0),
            quadratic(0.75),
            InvariantDensity::new(1.0, 2.0, RateFunction::root_quadratic()).unwrap(),
        ] {
            assert!((d.expect(|_| 1.0) - 1.0).abs() < 1e-8);
            assert!(d.expect(|x| x).abs() < 1e-8);
            for x in [0.1, 1.0, 3.3, 17.0] {
                assert!((d.pdf(x) - d.pdf(-x)).abs() <= 1e-12 * d.pdf(x).max(1e-300));
            }
            assert!((d.cdf(0.0) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn arctan_density_normalised_and_unimodal() {
        let d = InvariantDensity::new(1.0, 1.0, RateFunction::arctan_sq()).unwrap();
        assert!((d.expect(|_| 1.0) - 1.0).abs() < 1e-8);
        let pts: Vec<(f64, f64)> = d.grid().filter(|(x, _)| x.abs() < 10.0).collect();
        let sign_changes = pts
            .windows(3)
            .filter(|w| (w[1].1 - w[0].1).signum() != (w[2].1 - w[1].1).signum())
            .count();
        assert_eq!(sign_changes, 1);
        // Quadrature-backed G agrees with the tabulated grid values.
        let (x, p) = pts[pts.len() / 3];
        assert!((d.pdf(x) - p).abs() < 1e-9 * p);
    }

    #[test]
    fn w1_trivial_cases() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(wasserstein1(&xs, Reference::Samples(&xs)).unwrap(), 0.0);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.25).collect();
        assert!((wasserstein1(&xs, Reference::Samples(&shifted)).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(
            wasserstein1(&[], Reference::Samples(&xs)),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn w1_subsamples_larger_set() {
        let small = [0.0, 1.0];
        let large = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(wasserstein1(&small, Reference::Samples(&large)).unwrap(), 0.0);
        assert_eq!(wasserstein1(&large, Reference::Samples(&small)).unwrap(), 0.0);
    }
}
