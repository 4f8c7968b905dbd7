//! Model description: jump-rate function, mark law, parameters, and the
//! explicit rate constants `β` and `K_T`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, integrate_panels, Tolerance};
use crate::rng::{domain, Streams};

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type MarkSampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// Which closed form a [`RateFunction`] uses.
#[derive(Debug, Clone, PartialEq)]
pub enum RateKind {
    /// `1 + x²`
    Quadratic,
    /// `√(1 + x²)`
    RootQuadratic,
    /// `(π/2 + arctan x)²`
    ArctanSq,
    /// `c > 0`
    Constant(f64),
    UserDefined(String),
}

/// Jump-rate function `f` with the extras the simulators need: a decay
/// envelope `F(r) = sup_{|y|≤r} f(y)`, the Lipschitz constant of `√f`, and
/// `G(x) = ∫₀ˣ y/f(y) dy`.
#[derive(Clone)]
pub struct RateFunction {
    kind: RateKind,
    lipschitz_sqrt: f64,
    user: Option<(RealMap, RealMap)>,
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateFunction")
            .field("kind", &self.kind)
            .field("lipschitz_sqrt", &self.lipschitz_sqrt)
            .finish()
    }
}

impl RateFunction {
    pub fn quadratic() -> Self {
        Self {
            kind: RateKind::Quadratic,
            lipschitz_sqrt: 1.0,
            user: None,
        }
    }

    /// `√f = (1+x²)^{1/4}` has `sup |(√f)'| = 2^{-1/2}·3^{-3/4}`, attained at `x² = 2`.
    pub fn root_quadratic() -> Self {
        let l = 1.0 / (std::f64::consts::SQRT_2 * 3f64.powf(0.75));
        Self {
            kind: RateKind::RootQuadratic,
            lipschitz_sqrt: l,
            user: None,
        }
    }

    pub fn arctan_sq() -> Self {
        Self {
            kind: RateKind::ArctanSq,
            lipschitz_sqrt: 1.0,
            user: None,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "constant rate must be positive, got {c}"
            )));
        }
        Ok(Self {
            kind: RateKind::Constant(c),
            lipschitz_sqrt: 0.0,
            user: None,
        })
    }

    /// A rate function with a caller-supplied envelope. Run
    /// [`validate`] before simulating with it.
    pub fn user_defined<F, E>(name: &str, eval: F, envelope: E, lipschitz_sqrt: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        E: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz_sqrt >= 0.0 && lipschitz_sqrt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant of sqrt(f) must be finite and nonnegative, got {lipschitz_sqrt}"
            )));
        }
        Ok(Self {
            kind: RateKind::UserDefined(name.to_string()),
            lipschitz_sqrt,
            user: Some((Arc::new(eval), Arc::new(envelope))),
        })
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            RateKind::Quadratic => "quadratic",
            RateKind::RootQuadratic => "root_quadratic",
            RateKind::ArctanSq => "arctan_sq",
            RateKind::Constant(_) => "constant",
            RateKind::UserDefined(name) => name,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            RateKind::Quadratic => 1.0 + x * x,
            RateKind::RootQuadratic => (1.0 + x * x).sqrt(),
            RateKind::ArctanSq => {
                let s = std::f64::consts::FRAC_PI_2 + x.atan();
                s * s
            }
            RateKind::Constant(c) => *c,
            RateKind::UserDefined(_) => (self.user.as_ref().expect("user rate").0)(x),
        }
    }

    /// `F(r) = sup_{|y|≤r} f(y)`. Builtins are monotone on each half-line,
    /// so `F(r) = max(f(r), f(−r))`.
    #[inline]
    pub fn envelope(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.kind {
            RateKind::Quadratic | RateKind::RootQuadratic => self.eval(r),
            RateKind::ArctanSq => self.eval(r),
            RateKind::Constant(c) => *c,
            RateKind::UserDefined(_) => (self.user.as_ref().expect("user rate").1)(r),
        }
    }

    pub fn lipschitz_sqrt(&self) -> f64 {
        self.lipschitz_sqrt
    }

    /// `G(x) = ∫₀ˣ y/f(y) dy`.
    pub fn antiderivative_ratio(&self, x: f64) -> f64 {
        match &self.kind {
            RateKind::Quadratic => 0.5 * x.mul_add(x, 1.0).ln(),
            RateKind::RootQuadratic => x * x / ((1.0 + x * x).sqrt() + 1.0),
            RateKind::Constant(c) => 0.5 * x * x / c,
            RateKind::ArctanSq | RateKind::UserDefined(_) => {
                integrate_panels(|y| y / self.eval(y), x.min(0.0), x.max(0.0), Tolerance::default()) * x.signum()
            }
        }
    }
}

/// Which closed form a [`JumpDistribution`] uses.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpKind {
    Gaussian {
        sigma: f64,
    },
    /// `a` with probability `p`, `b` with probability `1 − p`.
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
    UserDefined(String),
}

/// Centered mark law `μ` of the jump heights.
#[derive(Clone)]
pub struct JumpDistribution {
    kind: JumpKind,
    variance: f64,
    abs_third_moment: f64,
    fourth_moment: f64,
    sampler: Option<MarkSampler>,
}

impl fmt::Debug for JumpDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpDistribution")
            .field("kind", &self.kind)
            .field("variance", &self.variance)
            .finish()
    }
}

// Tolerance on `pa + (1 − p)b = 0`, relative to the atom magnitudes; the
// ideal `(2, −1; 1/3)` law misses exact zero by one ulp.
const CENTERING_TOL: f64 = 1e-12;

impl JumpDistribution {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        let s2 = sigma * sigma;
        Ok(Self {
            kind: JumpKind::Gaussian { sigma },
            variance: s2,
            abs_third_moment: 2.0 * (2.0 / std::f64::consts::PI).sqrt() * s2 * sigma,
            fourth_moment: 3.0 * s2 * s2,
            sampler: None,
        })
    }

    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "two_point p must lie in (0, 1), got {p}"
            )));
        }
        if !(a.is_finite() && b.is_finite()) || a == b {
            return Err(Error::InvalidParameter(format!(
                "two_point atoms must be distinct and finite, got {a}, {b}"
            )));
        }
        let drift = p * a + (1.0 - p) * b;
        if drift.abs() > CENTERING_TOL * a.abs().max(b.abs()) {
            return Err(Error::InvalidParameter(format!(
                "two_point law must be centered: p*a + (1-p)*b = {drift}"
            )));
        }
        let m = |k: i32| p * a.abs().powi(k) + (1.0 - p) * b.abs().powi(k);
        Ok(Self {
            kind: JumpKind::TwoPoint { a, b, p },
            variance: m(2),
            abs_third_moment: m(3),
            fourth_moment: m(4),
            sampler: None,
        })
    }

    /// Centered two-point law with atoms `a`, `b`; `p = b/(b − a)`.
    pub fn two_point_centered(a: f64, b: f64) -> Result<Self> {
        Self::two_point(a, b, b / (b - a))
    }

    pub fn user_defined<S>(
        name: &str,
        sampler: S,
        variance: f64,
        abs_third_moment: f64,
        fourth_moment: f64,
    ) -> Result<Self>
    where
        S: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mark variance must be positive, got {variance}"
            )));
        }
        if !(fourth_moment.is_finite() && fourth_moment >= variance * variance) {
            return Err(Error::InvalidParameter(format!(
                "fourth moment must be finite and at least variance^2, got {fourth_moment}"
            )));
        }
        Ok(Self {
            kind: JumpKind::UserDefined(name.to_string()),
            variance,
            abs_third_moment,
            fourth_moment,
            sampler: Some(Arc::new(sampler)),
        })
    }

    pub fn kind(&self) -> &JumpKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            JumpKind::Gaussian { .. } => "gaussian",
            JumpKind::TwoPoint { .. } => "two_point",
            JumpKind::UserDefined(name) => name,
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn abs_third_moment(&self) -> f64 {
        self.abs_third_moment
    }

    pub fn fourth_moment(&self) -> f64 {
        self.fourth_moment
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            JumpKind::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            JumpKind::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < *p {
                    *a
                } else {
                    *b
                }
            }
            JumpKind::UserDefined(_) => (self.sampler.as_ref().expect("user sampler"))(rng),
        }
    }
}

/// One finite-`N` system together with its diffusion limit.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub alpha: f64,
    pub rate: RateFunction,
    pub jump: JumpDistribution,
    pub n_components: usize,
    pub x0: f64,
}

impl ModelSpec {
    pub fn new(alpha: f64, rate: RateFunction, jump: JumpDistribution, n_components: usize, x0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        if n_components < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        Ok(Self {
            alpha,
            rate,
            jump,
            n_components,
            x0,
        })
    }

    pub fn with_n(&self, n_components: usize) -> Result<Self> {
        Self::new(self.alpha, self.rate.clone(), self.jump.clone(), n_components, self.x0)
    }

    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        Self::new(self.alpha, self.rate.clone(), self.jump.clone(), self.n_components, x0)
    }

    pub fn sigma2(&self) -> f64 {
        self.jump.variance()
    }

    pub fn beta(&self) -> f64 {
        beta(self.alpha, self.sigma2(), self.rate.lipschitz_sqrt())
    }

    pub fn default_epsilon(&self) -> f64 {
        default_epsilon(self.alpha, self.sigma2(), self.rate.lipschitz_sqrt())
    }

    pub fn k_t(&self, horizon: f64, epsilon: f64) -> Result<f64> {
        k_t(self.alpha, self.sigma2(), self.rate.lipschitz_sqrt(), horizon, epsilon)
    }

    /// `α > (7/6) σ² L²`: the rate constants are uniform in time.
    pub fn sharp_regime(&self) -> bool {
        sharp_regime(self.alpha, self.sigma2(), self.rate.lipschitz_sqrt())
    }
}

pub fn sharp_regime(alpha: f64, sigma2: f64, lipschitz: f64) -> bool {
    alpha > 7.0 / 6.0 * sigma2 * lipschitz * lipschitz
}

/// `β = max(½σ²L² − α, 2σ²L² − 2α, (7/2)σ²L² − 3α)`.
pub fn beta(alpha: f64, sigma2: f64, lipschitz: f64) -> f64 {
    let s = sigma2 * lipschitz * lipschitz;
    (0.5 * s - alpha).max(2.0 * s - 2.0 * alpha).max(3.5 * s - 3.0 * alpha)
}

/// `(2α − σ²L²)/2` when positive, else 1.
pub fn default_epsilon(alpha: f64, sigma2: f64, lipschitz: f64) -> f64 {
    let gap = 2.0 * alpha - sigma2 * lipschitz * lipschitz;
    if gap > 0.0 {
        0.5 * gap
    } else {
        1.0
    }
}

/// `K_T = (1 + 1/ε) ∫₀ᵀ (1+s²) e^{βs} (1 + e^{(σ²L² − 2α + ε)(T−s)}) ds`.
///
/// The integrand depends on `T`, so `K_T` is nondecreasing only while
/// `σ²L² − 2α + ε ≥ 0`. Below that it can overshoot its limit by a small
/// amount before settling.
pub fn k_t(alpha: f64, sigma2: f64, lipschitz: f64, horizon: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let b = beta(alpha, sigma2, lipschitz);
    let c = sigma2 * lipschitz * lipschitz - 2.0 * alpha + epsilon;
    let integrand = |s: f64| (1.0 + s * s) * (b * s).exp() * (1.0 + (c * (horizon - s)).exp());
    // Both ends can carry unit-scale boundary layers; cut geometrically
    // toward each of them.
    let mut cuts = vec![0.0, horizon];
    let mut d = 1.0;
    while d < horizon {
        cuts.push(d);
        cuts.push(horizon - d);
        d *= 2.0;
    }
    cuts.retain(|&s| (0.0..=horizon).contains(&s));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tol = Tolerance::default();
    let integral: f64 = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], tol))
        .sum();
    Ok((1.0 + 1.0 / epsilon) * integral)
}

/// Named pass/fail line of a [`Diagnostics`] report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
    pub sharp_regime: bool,
    pub beta: f64,
    pub epsilon: f64,
}

impl Diagnostics {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Grid settings for [`validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationGrid {
    pub radius: f64,
    pub points: usize,
    pub mark_draws: usize,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        Self {
            radius: 20.0,
            points: 2001,
            mark_draws: 1_000_000,
        }
    }
}

pub fn validate(spec: &ModelSpec) -> Diagnostics {
    validate_with(spec, ValidationGrid::default())
}

/// Checks the model assumptions on a fixed grid and by sampling the mark law.
/// Failed checks are reported, never raised.
pub fn validate_with(spec: &ModelSpec, grid: ValidationGrid) -> Diagnostics {
    let f = &spec.rate;
    let lip = f.lipschitz_sqrt();
    let m = grid.points.max(2);
    let xs: Vec<f64> = (0..m)
        .map(|i| -grid.radius + 2.0 * grid.radius * i as f64 / (m - 1) as f64)
        .collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let mut checks = Vec::new();

    let bad_pos = xs.iter().zip(&fx).find(|(_, &v)| !(v > 0.0 && v.is_finite()));
    checks.push(Check {
        name: "rate_positive".into(),
        pass: bad_pos.is_none(),
        detail: match bad_pos {
            Some((x, v)) => format!("f({x}) = {v}"),
            None => format!("f > 0 on {m} points of [-{r}, {r}]", r = grid.radius),
        },
    });

    let worst_lip = xs
        .windows(2)
        .zip(fx.windows(2))
        .map(|(x, v)| (v[1].max(0.0).sqrt() - v[0].max(0.0).sqrt()).abs() / (x[1] - x[0]))
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "sqrt_rate_lipschitz".into(),
        pass: worst_lip <= lip * (1.0 + 1e-9) + 1e-12,
        detail: format!("max difference quotient {worst_lip:.6e} vs L = {lip:.6e}"),
    });

    // Running sup of f over |y| ≤ r, visiting grid points by |y|.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| xs[i].abs().total_cmp(&xs[j].abs()));
    let mut running = f64::NEG_INFINITY;
    let mut env_fail = None;
    for &i in &order {
        running = running.max(fx[i]);
        let r = xs[i].abs();
        let env = f.envelope(r);
        if env < running * (1.0 - 1e-12) {
            env_fail = Some((r, env, running));
            break;
        }
    }
    checks.push(Check {
        name: "envelope_dominates".into(),
        pass: env_fail.is_none(),
        detail: match env_fail {
            Some((r, env, sup)) => format!("F({r}) = {env} < sup f = {sup}"),
            None => "F(r) >= f(y) for all grid |y| <= r".into(),
        },
    });

    let f0 = f.eval(0.0).max(0.0).sqrt();
    let growth_fail = xs
        .iter()
        .zip(&fx)
        .find(|(&x, &v)| v > (f0 + lip * x.abs()).powi(2) * (1.0 + 1e-12));
    checks.push(Check {
        name: "quadratic_growth".into(),
        pass: growth_fail.is_none(),
        detail: match growth_fail {
            Some((x, v)) => format!("f({x}) = {v} > (sqrt f(0) + L|x|)^2"),
            None => "f(x) <= (sqrt f(0) + L|x|)^2 on grid".into(),
        },
    });

    checks.extend(mark_checks(&spec.jump, grid.mark_draws));

    checks.push(Check {
        name: "alpha_positive".into(),
        pass: spec.alpha > 0.0,
        detail: format!("alpha = {}", spec.alpha),
    });

    Diagnostics {
        checks,
        sharp_regime: spec.sharp_regime(),
        beta: spec.beta(),
        epsilon: spec.default_epsilon(),
    }
}

fn mark_checks(jump: &JumpDistribution, draws: usize) -> Vec<Check> {
    let mut out = Vec::new();
    if let JumpKind::TwoPoint { a, b, p } = jump.kind() {
        let drift = p * a + (1.0 - p) * b;
        out.push(Check {
            name: "mark_two_point_centered".into(),
            pass: drift.abs() <= CENTERING_TOL * a.abs().max(b.abs()),
            detail: format!("p*a + (1-p)*b = {drift:e}"),
        });
    }
    if draws < 2 {
        return out;
    }
    let mut rng = Streams::new(0, domain::VALIDATE).stream(0);
    let us: Vec<f64> = (0..draws).map(|_| jump.sample(&mut rng)).collect();
    let mean = crate::stats::McEstimate::from_samples(&us);
    out.push(Check {
        name: "mark_centered".into(),
        pass: mean.within(0.0, 4.0),
        detail: format!(
            "sample mean {:.3e} with sem {:.3e} over {draws} draws",
            mean.mean, mean.sem
        ),
    });
    let sq: Vec<f64> = us.iter().map(|u| u * u).collect();
    let m2 = crate::stats::McEstimate::from_samples(&sq);
    out.push(Check {
        name: "mark_variance".into(),
        pass: m2.within(jump.variance(), 4.0),
        detail: format!(
            "sample second moment {:.6} vs {:.6} (sem {:.2e})",
            m2.mean,
            jump.variance(),
            m2.sem
        ),
    });
    let q: Vec<f64> = us.iter().map(|u| u.powi(4)).collect();
    let m4 = crate::stats::McEstimate::from_samples(&q);
    out.push(Check {
        name: "mark_fourth_moment".into(),
        pass: jump.fourth_moment().is_finite() && m4.within(jump.fourth_moment(), 4.0),
        detail: format!(
            "sample fourth moment {:.6} vs {:.6} (sem {:.2e})",
            m4.mean,
            jump.fourth_moment(),
            m4.sem
        ),
    });
    out
}
