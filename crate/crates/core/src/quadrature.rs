//! Numerical integration used throughout the crate.
//!
//! Adaptive Simpson with interval bisection for smooth one-dimensional
//! integrands, and Gauss–Hermite rules for Gaussian expectations.

use std::sync::OnceLock;

/// Stopping rule for [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-9,
            max_depth: 60,
        }
    }
}

// Number of forced bisections before the error test is allowed to stop.
// Keeps narrow peaks from being skipped by the initial five-point sample.
const MIN_DEPTH: u32 = 4;

/// Integrates `f` over `[a, b]` with the default tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    adaptive_simpson(&f, a, b, Tolerance::default())
}

/// Adaptive Simpson quadrature. Returns 0 on an empty interval and
/// flips the sign for `b < a`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    // Coarse pass to set the relative scale.
    let scale = coarse_estimate(f, a, b);
    let eps = tol.abs.max(tol.rel * scale.abs());
    recurse(f, a, b, fa, fm, fb, whole, eps, 0, tol.max_depth)
}

fn coarse_estimate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            simpson(lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi))
        })
        .sum()
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    max_depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= max_depth || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * eps) || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1, max_depth)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1, max_depth)
}

/// Integrates over `[lo, hi]` after splitting at geometrically spaced
/// breakpoints `±1, ±2, ±4, …` so that wide ranges around a unit-scale
/// feature near the origin are resolved panel by panel.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> f64 {
    let mut cuts = vec![lo];
    let mut r = 1.0;
    let mut inner = Vec::new();
    while r < hi.abs().max(lo.abs()) {
        inner.push(r);
        inner.push(-r);
        r *= 2.0;
    }
    inner.push(0.0);
    inner.retain(|&c| c > lo && c < hi);
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.extend(inner);
    cuts.push(hi);
    cuts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], tol)).sum()
}

/// Physicists' Gauss–Hermite rule: nodes and weights for `∫ g(x) e^{-x²} dx`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes and weights rescaled for `E[g(Z)]`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_hermite(n);
        let s = std::f64::consts::PI.sqrt();
        Self {
            nodes: x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|v| v / s).collect(),
        }
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * g(z)).sum()
    }

    /// `E|g(Z)|`, used as the scale of quadrature-error guards.
    pub fn expect_abs<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.expect(|z| g(z).abs())
    }
}

/// Cached 64-node rule.
pub fn normal_rule_64() -> &'static NormalRule {
    static RULE: OnceLock<NormalRule> = OnceLock::new();
    RULE.get_or_init(|| NormalRule::new(64))
}

/// Cached 128-node rule, the doubling guard for [`normal_rule_64`].
pub fn normal_rule_128() -> &'static NormalRule {
    static RULE: OnceLock<NormalRule> = OnceLock::new();
    RULE.get_or_init(|| NormalRule::new(128))
}
