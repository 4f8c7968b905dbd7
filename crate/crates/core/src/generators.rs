//! Pointwise generators of the jump system and of the limit diffusion,
//! and the third-order bound on their difference.
//!
//! ```text
//! Āg(x)   = −αx g′(x) + ½σ² f(x) g″(x)
//! Aᴺg(x)  = −αx g′(x) + N f(x) E[g(x + U/√N) − g(x)],   U ~ μ
//! |Aᴺg − Āg|(x) ≤ f(x) ‖g‴‖∞ E|U|³ / (6√N)
//! ```

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{JumpKind, ModelSpec};
use crate::quadrature::{normal_rule_128, normal_rule_64, NormalRule};
use crate::stats::linear_fit;

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A `C³` test function with its first three derivatives and sup-norm
/// bounds `[‖g‖, ‖g′‖, ‖g″‖, ‖g‴‖]`. For unbounded functions the bounds
/// hold on `domain` only.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    derivs: [RealMap; 4],
    pub bounds: [f64; 4],
    pub domain: Option<(f64, f64)>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Default half-width of the interval carrying monomial bounds.
pub const MONOMIAL_RADIUS: f64 = 10.0;

impl TestFunction {
    pub fn new<G, D1, D2, D3>(
        name: &str,
        g: G,
        d1: D1,
        d2: D2,
        d3: D3,
        bounds: [f64; 4],
        domain: Option<(f64, f64)>,
    ) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
        D3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            derivs: [Arc::new(g), Arc::new(d1), Arc::new(d2), Arc::new(d3)],
            bounds,
            domain,
        }
    }

    pub fn sin() -> Self {
        Self::new("sin", f64::sin, f64::cos, |x| -x.sin(), |x| -x.cos(), [1.0; 4], None)
    }

    pub fn tanh() -> Self {
        let sech2 = |x: f64| 1.0 / x.cosh().powi(2);
        Self::new(
            "tanh",
            f64::tanh,
            sech2,
            move |x| -2.0 * sech2(x) * x.tanh(),
            move |x| {
                let s = sech2(x);
                4.0 * s * x.tanh().powi(2) - 2.0 * s * s
            },
            // sup |tanh″| = 4/(3√3) at sech² = 2/3
            [1.0, 1.0, 4.0 / (3.0 * 3f64.sqrt()), 2.0],
            None,
        )
    }

    /// `e^{−x²/2}`.
    pub fn gaussian_bump() -> Self {
        let e = |x: f64| (-0.5 * x * x).exp();
        // |g‴| = |3x − x³| e^{−x²/2} peaks at x² = 3 − √6.
        let xs = (3.0 - 6f64.sqrt()).sqrt();
        let m3 = (3.0 * xs - xs.powi(3)) * e(xs);
        Self::new(
            "gaussian_bump",
            e,
            move |x| -x * e(x),
            move |x| (x * x - 1.0) * e(x),
            move |x| (3.0 * x - x * x * x) * e(x),
            [1.0, (-0.5f64).exp(), 1.0, m3],
            None,
        )
    }

    /// `x^k` for `k ∈ {0, 1, 2, 3}` with bounds on `[−radius, radius]`.
    pub fn monomial(k: u32, radius: f64) -> Result<Self> {
        let r = radius;
        let dom = Some((-r, r));
        Ok(match k {
            0 => Self::new("one", |_| 1.0, |_| 0.0, |_| 0.0, |_| 0.0, [1.0, 0.0, 0.0, 0.0], None),
            1 => Self::new("x", |x| x, |_| 1.0, |_| 0.0, |_| 0.0, [r, 1.0, 0.0, 0.0], dom),
            2 => Self::new(
                "x2",
                |x| x * x,
                |x| 2.0 * x,
                |_| 2.0,
                |_| 0.0,
                [r * r, 2.0 * r, 2.0, 0.0],
                dom,
            ),
            3 => Self::new(
                "x3",
                |x| x * x * x,
                |x| 3.0 * x * x,
                |x| 6.0 * x,
                |_| 6.0,
                [r.powi(3), 3.0 * r * r, 6.0 * r, 6.0],
                dom,
            ),
            _ => return Err(Error::InvalidParameter(format!("monomial degree {k} not supported"))),
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "sin" => Ok(Self::sin()),
            "tanh" => Ok(Self::tanh()),
            "gaussian_bump" | "bump" => Ok(Self::gaussian_bump()),
            "one" => Self::monomial(0, MONOMIAL_RADIUS),
            "x" => Self::monomial(1, MONOMIAL_RADIUS),
            "x2" => Self::monomial(2, MONOMIAL_RADIUS),
            "x3" => Self::monomial(3, MONOMIAL_RADIUS),
            other => Err(Error::InvalidParameter(format!("unknown test function `{other}`"))),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.derivs[0])(x)
    }

    /// `g^{(order)}(x)` for `order ≤ 3`.
    #[inline]
    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        (self.derivs[order])(x)
    }

    /// `‖g‖_{3,∞} = Σ_k ‖g^{(k)}‖∞`.
    pub fn norm3(&self) -> f64 {
        self.bounds.iter().sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.domain.is_none_or(|(lo, hi)| (lo..=hi).contains(&x))
    }

    /// Compares each supplied derivative against central differences of the
    /// one below it at `points` random points. Returns the worst mismatch
    /// `|fd − d| / (1 + |d|)`.
    pub fn derivative_mismatch<R: Rng>(&self, points: usize, rng: &mut R) -> f64 {
        const STEP: f64 = 1e-5;
        let (lo, hi) = self.domain.unwrap_or((-5.0, 5.0));
        let mut worst = 0.0f64;
        for _ in 0..points {
            let x = rng.random_range(lo..hi);
            for k in 1..4 {
                let fd = (self.deriv(k - 1, x + STEP) - self.deriv(k - 1, x - STEP)) / (2.0 * STEP);
                let d = self.deriv(k, x);
                worst = worst.max((fd - d).abs() / (1.0 + d.abs()));
            }
        }
        worst
    }
}

/// `Āg(x) = −αx g′(x) + ½σ² f(x) g″(x)`.
pub fn apply_a_bar(g: &TestFunction, spec: &ModelSpec, x: f64) -> f64 {
    -spec.alpha * x * g.deriv(1, x) + 0.5 * spec.sigma2() * spec.rate.eval(x) * g.deriv(2, x)
}

/// `E[g(x + U/√N) − g(x)]`, closed form for two-point marks and 64-node
/// Gauss–Hermite (checked against 128 nodes) for Gaussian marks.
pub fn jump_expectation(g: &TestFunction, spec: &ModelSpec, x: f64) -> Result<f64> {
    let scale = 1.0 / (spec.n_components as f64).sqrt();
    let gx = g.eval(x);
    match *spec.jump.kind() {
        JumpKind::TwoPoint { a, b, p } => {
            Ok(p * (g.eval(x + a * scale) - gx) + (1.0 - p) * (g.eval(x + b * scale) - gx))
        }
        JumpKind::Gaussian { sigma } => {
            let s = sigma * scale;
            let eval = |rule: &NormalRule| rule.expect(|z| g.eval(x + s * z) - gx);
            let value = eval(normal_rule_64());
            let doubled = eval(normal_rule_128());
            let magnitude = normal_rule_128().expect_abs(|z| g.eval(x + s * z) - gx);
            if (value - doubled).abs() > 1e-10 * magnitude.max(f64::MIN_POSITIVE) {
                return Err(Error::QuadratureGuard { value, doubled });
            }
            Ok(value)
        }
        JumpKind::UserDefined(ref name) => Err(Error::UnsupportedJumpLaw(name.clone())),
    }
}

/// `Aᴺg(x) = −αx g′(x) + N f(x) E[g(x + U/√N) − g(x)]` with `N` taken
/// from the spec.
pub fn apply_a_n(g: &TestFunction, spec: &ModelSpec, x: f64) -> Result<f64> {
    let jump = jump_expectation(g, spec, x)?;
    Ok(-spec.alpha * x * g.deriv(1, x) + spec.n_components as f64 * spec.rate.eval(x) * jump)
}

/// `f(x) ‖g‴‖∞ E|U|³ / (6√N)`.
pub fn gap_bound(g: &TestFunction, spec: &ModelSpec, x: f64) -> f64 {
    spec.rate.eval(x) * g.bounds[3] * spec.jump.abs_third_moment() / (6.0 * (spec.n_components as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub x: f64,
    pub n: usize,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub g_name: String,
    pub worst_ratio: f64,
    pub violations: Vec<GapRow>,
    /// Log-log slope of `max_x gap` against `N`; `None` when fewer than two
    /// `N` have a nonzero gap.
    pub slope: Option<f64>,
    pub table: Vec<GapRow>,
}

impl GapReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            Some(v) => Err(Error::GapViolation {
                x: v.x,
                n: v.n,
                gap: v.gap,
                bound: v.bound,
            }),
            None => Ok(()),
        }
    }
}

pub const GAP_TOLERANCE: f64 = 1e-10;

/// Evaluates `|Aᴺg − Āg|` against the bound on every `(x, N)` pair.
pub fn gap_check(g: &TestFunction, spec: &ModelSpec, x_grid: &[f64], n_grid: &[usize]) -> Result<GapReport> {
    if let Some(&x) = x_grid.iter().find(|&&x| !g.contains(x)) {
        return Err(Error::InvalidParameter(format!(
            "x = {x} lies outside the interval where the bounds of `{}` hold",
            g.name
        )));
    }
    let mut table = Vec::with_capacity(x_grid.len() * n_grid.len());
    let mut worst_ratio = 0.0f64;
    let mut violations = Vec::new();
    let mut max_gaps = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let sys = spec.with_n(n)?;
        let mut max_gap = 0.0f64;
        for &x in x_grid {
            let gap = (apply_a_n(g, &sys, x)? - apply_a_bar(g, &sys, x)).abs();
            let bound = gap_bound(g, &sys, x);
            let row = GapRow { x, n, gap, bound };
            if gap > bound + GAP_TOLERANCE {
                violations.push(row);
            }
            let ratio = if bound > 0.0 {
                gap / bound
            } else if gap <= GAP_TOLERANCE {
                0.0
            } else {
                f64::INFINITY
            };
            worst_ratio = worst_ratio.max(ratio);
            max_gap = max_gap.max(gap);
            table.push(row);
        }
        max_gaps.push((n, max_gap));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = max_gaps
        .iter()
        .filter(|(_, gap)| *gap > GAP_TOLERANCE)
        .map(|&(n, gap)| ((n as f64).ln(), gap.ln()))
        .unzip();
    let slope = (xs.len() >= 2).then(|| linear_fit(&xs, &ys).slope);
    Ok(GapReport {
        g_name: g.name.clone(),
        worst_ratio,
        violations,
        slope,
        table,
    })
}
