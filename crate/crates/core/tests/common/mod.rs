//! Oracles shared by the integration tests and the acceptance runner.

use hawkes_diffusive::model::beta;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `K_T` by composite 20-point Gauss–Legendre on 4000 panels.
pub fn k_t_oracle(alpha: f64, sigma2: f64, l: f64, t: f64, eps: f64) -> f64 {
    let b = beta(alpha, sigma2, l);
    let c = sigma2 * l * l - 2.0 * alpha + eps;
    let f = |s: f64| (1.0 + s * s) * (b * s).exp() * (1.0 + (c * (t - s)).exp());
    let rule = gauss_legendre(20);
    let panels = 4000;
    let w = t / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * w;
        total += rule.iter().map(|&(x, wt)| wt * f(mid + 0.5 * w * x)).sum::<f64>() * 0.5 * w;
    }
    (1.0 + 1.0 / eps) * total
}
