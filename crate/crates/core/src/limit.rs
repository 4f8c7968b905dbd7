//! The limit diffusion `dX = −αX dt + σ√f(X) dB` and the Cox counting
//! processes it drives.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, RateFunction};

/// Coefficients of the limit SDE. Built from a [`ModelSpec`] with
/// `σ² = Var μ`; `sigma` may be overridden (e.g. `σ = 0` for checks).
#[derive(Debug, Clone)]
pub struct LimitDiffusion {
    pub alpha: f64,
    pub sigma: f64,
    pub rate: RateFunction,
    pub x0: f64,
}

impl LimitDiffusion {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        Self {
            alpha: spec.alpha,
            sigma: spec.jump.sigma(),
            rate: spec.rate.clone(),
            x0: spec.x0,
        }
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }
}

/// Values on the uniform grid `k·h`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.h
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.h)
    }

    /// Left-endpoint Riemann sum of `∫ f(X_s) ds`.
    pub fn integrated_rate(&self, rate: &RateFunction) -> f64 {
        self.values[..self.steps()].iter().map(|&x| rate.eval(x)).sum::<f64>() * self.h
    }
}

/// Path sampled at arbitrary times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Number of steps of size `h` covering `[0, horizon]`, tolerant to the
/// rounding in `horizon / h`.
pub fn step_count(horizon: f64, h: f64) -> usize {
    let ratio = horizon / h;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// One Euler–Maruyama step with a given standard normal `xi`.
#[inline]
pub fn em_step(diff: &LimitDiffusion, x: f64, h: f64, xi: f64) -> f64 {
    x - diff.alpha * x * h + diff.sigma * (diff.rate.eval(x) * h).sqrt() * xi
}

fn check_step(h: f64, horizon: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    Ok(())
}

pub fn simulate_em<R: Rng>(diff: &LimitDiffusion, horizon: f64, h: f64, rng: &mut R) -> Result<GridPath> {
    check_step(h, horizon)?;
    let steps = step_count(horizon, h);
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = diff.x0;
    values.push(x);
    for k in 0..steps {
        let xi: f64 = StandardNormal.sample(rng);
        x = em_step(diff, x, h, xi);
        if !x.is_finite() {
            return Err(Error::NonFiniteState {
                step: k + 1,
                time: (k + 1) as f64 * h,
                value: x,
            });
        }
        values.push(x);
    }
    Ok(GridPath { h, values })
}

/// Terminal values of two Euler–Maruyama chains driven by the same
/// Brownian path: step `h` and step `h/2`. The difference isolates the
/// discretisation bias with small variance.
pub fn em_coupled_terminal<R: Rng>(diff: &LimitDiffusion, horizon: f64, h: f64, rng: &mut R) -> Result<(f64, f64)> {
    check_step(h, horizon)?;
    let steps = step_count(horizon, h);
    let half = 0.5 * h;
    let mut coarse = diff.x0;
    let mut fine = diff.x0;
    for k in 0..steps {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        fine = em_step(diff, fine, half, z1);
        fine = em_step(diff, fine, half, z2);
        coarse = em_step(diff, coarse, h, (z1 + z2) * std::f64::consts::FRAC_1_SQRT_2);
        if !(coarse.is_finite() && fine.is_finite()) {
            return Err(Error::NonFiniteState {
                step: k + 1,
                time: (k + 1) as f64 * h,
                value: coarse + fine,
            });
        }
    }
    Ok((coarse, fine))
}

/// Terminal value and left-endpoint Riemann sum of `∫₀ᵀ f(X̄_s) ds` along
/// one Euler–Maruyama path, without storing it.
pub fn em_integrated_rate<R: Rng>(diff: &LimitDiffusion, horizon: f64, h: f64, rng: &mut R) -> Result<(f64, f64)> {
    check_step(h, horizon)?;
    let steps = step_count(horizon, h);
    let mut x = diff.x0;
    let mut integral = 0.0;
    for k in 0..steps {
        integral += diff.rate.eval(x);
        let xi: f64 = StandardNormal.sample(rng);
        x = em_step(diff, x, h, xi);
        if !x.is_finite() {
            return Err(Error::NonFiniteState {
                step: k + 1,
                time: (k + 1) as f64 * h,
                value: x,
            });
        }
    }
    Ok((x, integral * h))
}

/// Exact Ornstein–Uhlenbeck transitions (the `f ≡ 1` limit) at sorted `times`.
pub fn simulate_ou_exact<R: Rng>(alpha: f64, sigma: f64, x0: f64, times: &[f64], rng: &mut R) -> Result<SampledPath> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "OU times must be sorted and nonnegative".into(),
        ));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut x = x0;
    let mut now = 0.0;
    for &t in times {
        x = ou_transition(alpha, sigma, x, t - now, rng);
        now = t;
        values.push(x);
    }
    Ok(SampledPath {
        times: times.to_vec(),
        values,
    })
}

pub fn ou_transition<R: Rng>(alpha: f64, sigma: f64, x: f64, dt: f64, rng: &mut R) -> f64 {
    if dt == 0.0 {
        return x;
    }
    let decay = (-alpha * dt).exp();
    let var = sigma * sigma * (-(-2.0 * alpha * dt).exp_m1()) / (2.0 * alpha);
    let z: f64 = StandardNormal.sample(rng);
    x * decay + var.sqrt() * z
}

/// Per-component sorted event times of the Cox processes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxLog {
    pub times: Vec<Vec<f64>>,
    pub horizon: f64,
}

impl CoxLog {
    pub fn count(&self, component: usize) -> usize {
        self.times[component - 1].len()
    }

    /// All events as `(t, component)` sorted by time.
    pub fn merged(&self) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .times
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i + 1)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }
}

/// Conditionally on `path`, `k` independent Poisson processes with
/// intensity `f(X(jh))` frozen on each cell `[jh, (j+1)h)`.
///
/// Sampled by inverting the integrated intensity with unit exponential
/// gaps, which gives per-cell counts `Poisson(f h)` with uniform times.
pub fn cox_counts<R: Rng>(path: &GridPath, rate: &RateFunction, k: usize, rng: &mut R) -> CoxLog {
    let h = path.h;
    let cells: Vec<f64> = path.values[..path.steps()].iter().map(|&x| rate.eval(x)).collect();
    let mut times = Vec::with_capacity(k);
    for _ in 0..k {
        let mut ts = Vec::new();
        let mut need: f64 = Exp1.sample(rng);
        for (c, &lam) in cells.iter().enumerate() {
            let start = c as f64 * h;
            let mut used = 0.0;
            loop {
                let avail = lam * (h - used);
                if need > avail {
                    need -= avail;
                    break;
                }
                used += need / lam;
                ts.push(start + used);
                need = Exp1.sample(rng);
            }
        }
        times.push(ts);
    }
    CoxLog {
        times,
        horizon: path.horizon(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JumpDistribution;
    use crate::rng::{domain, Streams};
    use rand::SeedableRng;

    fn ou_spec() -> LimitDiffusion {
        LimitDiffusion {
            alpha: 1.0,
            sigma: 1.0,
            rate: RateFunction::constant(1.0).unwrap(),
            x0: 0.0,
        }
    }

    #[test]
    fn noiseless_recursion() {
        let diff = LimitDiffusion {
            sigma: 0.0,
            x0: 2.0,
            ..ou_spec()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let p = simulate_em(&diff, 1.0, 0.1, &mut rng).unwrap();
        assert_eq!(p.values.len(), 11);
        for (k, v) in p.values.iter().enumerate() {
            assert!((v - 2.0 * 0.9f64.powi(k as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_step_arithmetic() {
        let spec = ModelSpec::new(
            1.5,
            RateFunction::quadratic(),
            JumpDistribution::gaussian(0.7).unwrap(),
            10,
            0.8,
        )
        .unwrap();
        let diff = LimitDiffusion::from_spec(&spec);
        let h = 0.01;
        let x = em_step(&diff, 0.8, h, 1.0);
        let expect = 0.8 - 1.5 * 0.8 * h + 0.7 * ((1.0 + 0.64) * h).sqrt();
        assert!((x - expect).abs() < 1e-15);
    }

    #[test]
    fn step_count_tolerates_rounding() {
        assert_eq!(step_count(2.0, 1e-3), 2000);
        assert_eq!(step_count(0.3, 0.1), 3);
        assert_eq!(step_count(1.05, 0.1), 11);
        assert_eq!(step_count(0.0, 0.1), 0);
    }

    #[test]
    fn blow_up_is_reported() {
        let diff = LimitDiffusion {
            alpha: 1.0,
            sigma: 1.0,
            rate: RateFunction::quadratic(),
            x0: 1e200,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            simulate_em(&diff, 1.0, 0.5, &mut rng),
            Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn ou_identity_and_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert_eq!(ou_transition(1.0, 1.0, 3.0, 0.0, &mut rng), 3.0);
        let path = simulate_ou_exact(1.0, 0.0, 3.0, &[3f64.ln()], &mut rng).unwrap();
        assert!((path.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cox_constant_path_counts() {
        let path = GridPath {
            h: 0.01,
            values: vec![0.0; 501],
        };
        let rate = RateFunction::constant(2.0).unwrap();
        let s = Streams::new(5, domain::COX);
        let counts: Vec<f64> = (0..2000)
            .map(|r| cox_counts(&path, &rate, 1, &mut s.stream(r)).count(1) as f64)
            .collect();
        let est = crate::stats::McEstimate::from_samples(&counts);
        assert!(est.within(10.0, 4.0), "{est:?}");
        let log = cox_counts(&path, &rate, 3, &mut s.stream(0));
        for ts in &log.times {
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
            assert!(ts.iter().all(|&t| (0.0..=5.0).contains(&t)));
        }
    }
}
