//! Monte Carlo reductions with a fixed summation order, least-squares fits,
//! and the Kolmogorov–Smirnov statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Runs `reps` independent replications in parallel and returns their
/// outputs in replication order.
pub fn replicate<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Fallible variant of [`replicate`]; the first error in replication order wins.
pub fn try_replicate<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = (0..reps as u64).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is independent of how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Mean of a Monte Carlo functional with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub sem: f64,
    pub reps: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let sem = if n < 2 { 0.0 } else { (variance(xs) / n as f64).sqrt() };
        Self {
            mean: mean(xs),
            sem,
            reps: n,
        }
    }

    /// Point mass, used for `t = 0` shortcuts.
    pub fn exact(value: f64, reps: usize) -> Self {
        Self {
            mean: value,
            sem: 0.0,
            reps,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_sem(&self, other: &Self) -> f64 {
        self.sem.hypot(other.sem)
    }

    /// `|self − target| ≤ k·sem`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.sem
    }
}

/// Sample covariance of paired data and its standard error (delta method on
/// the centred products).
pub fn covariance(xs: &[f64], ys: &[f64]) -> McEstimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mx = mean(xs);
    let my = mean(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mut est = McEstimate::from_samples(&prods);
    if n > 1 {
        est.mean *= n as f64 / (n - 1) as f64;
    }
    est
}

/// `E[y]` with `x` as a control variate of known mean: the sample mean of
/// `y − ĉ(x − mean_x)` with `ĉ = Cov(x, y)/Var(x)` fitted on the same data.
pub fn control_variate(ys: &[f64], xs: &[f64], mean_x: f64) -> McEstimate {
    assert_eq!(xs.len(), ys.len());
    let vx = variance(xs);
    let c = if vx > 0.0 { covariance(xs, ys).mean / vx } else { 0.0 };
    let adjusted: Vec<f64> = ys.iter().zip(xs).map(|(y, x)| y - c * (x - mean_x)).collect();
    McEstimate::from_samples(&adjusted)
}

/// Sample variance with its standard error.
pub fn variance_estimate(xs: &[f64]) -> McEstimate {
    covariance(xs, xs)
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residuals (0 for two points).
    pub slope_se: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        slope_se,
        n,
    }
}

/// Two-sided 95% Student-t quantile.
pub fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
        2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match df {
        0 => f64::INFINITY,
        1..=30 => TABLE[df - 1],
        _ => 1.96,
    }
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic p-value `P(√n D > d)` of the Kolmogorov distribution, with the
/// usual small-sample correction `√n + 0.12 + 0.11/√n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
