//! Monte Carlo experiments comparing the `N`-component system with its limit.
//!
//! Every experiment draws from [`Streams`] keyed by a master seed, one stream
//! per replication, and reduces in replication order, so outputs depend
//! only on `(seed, configuration)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::TestFunction;
use crate::hawkes;
use crate::limit::{em_coupled_terminal, em_integrated_rate, step_count, LimitDiffusion};
use crate::model::ModelSpec;
use crate::rng::{domain, Streams};
use crate::stationary::{long_run_law, wasserstein1_with_sem, InvariantDensity};
use crate::stats::{
    control_variate, covariance, linear_fit, t_quantile_975, try_replicate, variance_estimate, LinearFit, McEstimate,
};

/// How a semigroup value is estimated from terminal samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Sample mean of `g(X_t)`.
    #[default]
    Plain,
    /// Sample mean corrected by `X_t`, whose mean is known exactly on both
    /// sides: `x₀e^{−αt}` for the jump system, `x₀(1 − αh)^{t/h}` for
    /// Euler–Maruyama.
    ControlVariate,
}

impl Estimator {
    fn estimate(self, gs: &[f64], xs: &[f64], mean_x: f64) -> McEstimate {
        match self {
            Estimator::Plain => McEstimate::from_samples(gs),
            Estimator::ControlVariate => control_variate(gs, xs, mean_x),
        }
    }
}

/// `P_t^N g(x₀) = E[g(X^N_t)]` with `x₀` taken from the spec.
pub fn semigroup_n(spec: &ModelSpec, g: &TestFunction, t: f64, reps: usize, streams: &Streams) -> Result<McEstimate> {
    semigroup_n_with(spec, g, t, reps, streams, Estimator::Plain)
}

pub fn semigroup_n_with(
    spec: &ModelSpec,
    g: &TestFunction,
    t: f64,
    reps: usize,
    streams: &Streams,
    estimator: Estimator,
) -> Result<McEstimate> {
    if t == 0.0 {
        return Ok(McEstimate::exact(g.eval(spec.x0), reps));
    }
    let xs = try_replicate(reps, |r| hawkes::terminal_state(spec, t, &mut streams.stream(r)))?;
    let gs: Vec<f64> = xs.iter().map(|&x| g.eval(x)).collect();
    Ok(estimator.estimate(&gs, &xs, spec.x0 * (-spec.alpha * t).exp()))
}

/// Limit-side estimate at step `h`, with the step-halving difference
/// measured on coupled Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub estimate: McEstimate,
    /// `E[g(X^{h/2}_t) − g(X^h_t)]`.
    pub halving: McEstimate,
    pub h: f64,
}

impl LimitEstimate {
    /// Halving `h` moves the estimate by less than three of its standard errors.
    pub fn halving_within_3sem(&self) -> bool {
        self.halving.mean.abs() < 3.0 * self.estimate.sem.max(self.halving.sem)
    }
}

/// `P̄_t g(x₀) = E[g(X̄_t)]` by Euler–Maruyama.
pub fn semigroup_limit(
    spec: &ModelSpec,
    g: &TestFunction,
    t: f64,
    h: f64,
    reps: usize,
    streams: &Streams,
) -> Result<LimitEstimate> {
    semigroup_limit_with(spec, g, t, h, reps, streams, Estimator::Plain)
}

pub fn semigroup_limit_with(
    spec: &ModelSpec,
    g: &TestFunction,
    t: f64,
    h: f64,
    reps: usize,
    streams: &Streams,
    estimator: Estimator,
) -> Result<LimitEstimate> {
    if t == 0.0 {
        let exact = McEstimate::exact(g.eval(spec.x0), reps);
        return Ok(LimitEstimate {
            estimate: exact,
            halving: McEstimate::exact(0.0, reps),
            h,
        });
    }
    let diff = LimitDiffusion::from_spec(spec);
    let pairs = try_replicate(reps, |r| em_coupled_terminal(&diff, t, h, &mut streams.stream(r)))?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g.eval(x)).collect();
    let delta: Vec<f64> = pairs.iter().map(|p| g.eval(p.1) - g.eval(p.0)).collect();
    let mean_x = spec.x0 * (1.0 - spec.alpha * h).powi(step_count(t, h) as i32);
    Ok(LimitEstimate {
        estimate: estimator.estimate(&gs, &xs, mean_x),
        halving: McEstimate::from_samples(&delta),
        h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub estimate: McEstimate,
    pub error: f64,
    pub sem: f64,
}

impl RateRow {
    pub fn resolvable(&self) -> bool {
        self.error > 3.0 * self.sem
    }
}

/// Log-log fit over the resolvable rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% half-width of the slope (Student t on `rows − 2` dof).
    pub half_width: f64,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub limit: LimitEstimate,
    pub fit: RateFit,
    /// `|halving| < (smallest resolved error)/5`.
    pub step_fine_enough: bool,
}

/// Fits `log error = intercept + slope · log N` over rows with
/// `error > 3·sem`. Rows must be sorted by `N`.
pub fn fit_rate(rows: &[RateRow]) -> Result<RateFit> {
    let used: Vec<&RateRow> = rows.iter().filter(|r| r.resolvable()).collect();
    if used.len() < 3 {
        return Err(Error::Unresolvable { resolvable: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|r| r.error.ln()).collect();
    let LinearFit {
        slope,
        intercept,
        slope_se,
        n,
    } = linear_fit(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        half_width: t_quantile_975(n - 2) * slope_se,
        rows_used: n,
    })
}

/// Error rows of the rate experiment before any fit. The limit side is
/// estimated once and shared by all rows; each side has its own
/// independent streams. Rows come back sorted by `N`.
#[allow(clippy::too_many_arguments)]
pub fn rate_table(
    base: &ModelSpec,
    g: &TestFunction,
    t: f64,
    n_grid: &[usize],
    reps: usize,
    h: f64,
    seed: u64,
    estimator: Estimator,
) -> Result<(Vec<RateRow>, LimitEstimate)> {
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    let limit = semigroup_limit_with(base, g, t, h, reps, &Streams::new(seed, domain::BROWNIAN), estimator)?;
    let jumps = Streams::new(seed, domain::HAWKES);
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let spec = base.with_n(n)?;
        let est = semigroup_n_with(&spec, g, t, reps, &jumps.child(n as u64), estimator)?;
        rows.push(RateRow {
            n,
            estimate: est,
            error: (est.mean - limit.estimate.mean).abs(),
            sem: est.combined_sem(&limit.estimate),
        });
    }
    Ok((rows, limit))
}

/// `|P_t^N g(x) − P̄_t g(x)|` over `n_grid`, with the fitted rate in `N`.
#[allow(clippy::too_many_arguments)]
pub fn rate_experiment(
    base: &ModelSpec,
    g: &TestFunction,
    t: f64,
    n_grid: &[usize],
    reps: usize,
    h: f64,
    seed: u64,
    estimator: Estimator,
) -> Result<RateReport> {
    let (rows, limit) = rate_table(base, g, t, n_grid, reps, h, seed, estimator)?;
    rate_report(rows, limit)
}

/// Fits the rows and applies the step-size guard.
pub fn rate_report(rows: Vec<RateRow>, limit: LimitEstimate) -> Result<RateReport> {
    let fit = fit_rate(&rows)?;
    let smallest = rows
        .iter()
        .filter(|r| r.resolvable())
        .map(|r| r.error)
        .fold(f64::INFINITY, f64::min);
    let step_fine_enough = limit.halving.mean.abs() < smallest / 5.0;
    Ok(RateReport {
        rows,
        limit,
        fit,
        step_fine_enough,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub m2: McEstimate,
    pub m4: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCurve {
    pub rows: Vec<MomentRow>,
    /// Slope of `E[X²]` against `t` over the second half of the grid, with
    /// its standard error from the per-replication slopes.
    pub tail_slope: Option<McEstimate>,
}

impl MomentCurve {
    /// Tail slope within two standard errors of zero.
    pub fn trend_flat(&self) -> bool {
        self.tail_slope.is_none_or(|s| s.within(0.0, 2.0))
    }
}

/// Empirical `E[(X^N_t)²]` and `E[(X^N_t)⁴]` at sorted `times`, all read
/// off the same paths.
pub fn moment_curve(spec: &ModelSpec, times: &[f64], reps: usize, streams: &Streams) -> Result<MomentCurve> {
    let paths = try_replicate(reps, |r| hawkes::observe(spec, times, &mut streams.stream(r)))?;
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let sq: Vec<f64> = paths.iter().map(|p| p[i] * p[i]).collect();
            let q: Vec<f64> = sq.iter().map(|v| v * v).collect();
            MomentRow {
                t,
                m2: McEstimate::from_samples(&sq),
                m4: McEstimate::from_samples(&q),
            }
        })
        .collect();

    let tail = times.len() / 2;
    let tail_slope = (times.len() - tail >= 2).then(|| {
        let ts = &times[tail..];
        let mt = ts.iter().sum::<f64>() / ts.len() as f64;
        let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
        let weights: Vec<f64> = ts.iter().map(|t| (t - mt) / sxx).collect();
        let per_rep: Vec<f64> = paths
            .iter()
            .map(|p| weights.iter().zip(&p[tail..]).map(|(w, x)| w * x * x).sum())
            .collect();
        McEstimate::from_samples(&per_rep)
    });
    Ok(MomentCurve { rows, tail_slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosReport {
    pub n: usize,
    pub horizon: f64,
    /// `Cov(Z^{N,1}_T, Z^{N,2}_T)` from the jump system.
    pub cov_n: McEstimate,
    /// `Var(∫₀ᵀ f(X̄_s) ds)` from the limit diffusion.
    pub var_lambda: McEstimate,
    /// `Cov(Z̄¹_T, Z̄²_T)` of the Cox processes driven by the same paths.
    pub cov_cox: McEstimate,
    pub combined_sem: f64,
}

impl ChaosReport {
    pub fn discrepancy(&self) -> f64 {
        (self.cov_n.mean - self.var_lambda.mean).abs()
    }

    /// `|cov_N − var_λ| ≤ 4` combined standard errors.
    pub fn agrees(&self) -> bool {
        self.discrepancy() <= 4.0 * self.combined_sem
    }
}

/// Compares the pairwise covariance of two components of the jump system
/// with the variance of the integrated limit intensity.
pub fn chaos_covariance(
    spec: &ModelSpec,
    horizon: f64,
    k: usize,
    h: f64,
    reps: usize,
    seed: u64,
) -> Result<ChaosReport> {
    if k < 2 {
        return Err(Error::InvalidParameter("chaos covariance needs k >= 2".into()));
    }
    let jumps = Streams::new(seed, domain::HAWKES);
    let counts = try_replicate(reps, |r| {
        hawkes::component_counts(spec, horizon, k, &mut jumps.stream(r))
    })?;
    let z1: Vec<f64> = counts.iter().map(|c| c[0] as f64).collect();
    let z2: Vec<f64> = counts.iter().map(|c| c[1] as f64).collect();
    let cov_n = covariance(&z1, &z2);

    let diff = LimitDiffusion::from_spec(spec);
    let brownian = Streams::new(seed, domain::BROWNIAN);
    let cox = Streams::new(seed, domain::COX);
    let limit = try_replicate(reps, |r| {
        let path = crate::limit::simulate_em(&diff, horizon, h, &mut brownian.stream(r))?;
        let lambda = path.integrated_rate(&diff.rate);
        let log = crate::limit::cox_counts(&path, &diff.rate, 2, &mut cox.stream(r));
        Ok((lambda, log.count(1) as f64, log.count(2) as f64))
    })?;
    let lambdas: Vec<f64> = limit.iter().map(|v| v.0).collect();
    let c1: Vec<f64> = limit.iter().map(|v| v.1).collect();
    let c2: Vec<f64> = limit.iter().map(|v| v.2).collect();
    let var_lambda = variance_estimate(&lambdas);
    Ok(ChaosReport {
        n: spec.n_components,
        horizon,
        cov_n,
        var_lambda,
        cov_cox: covariance(&c1, &c2),
        combined_sem: cov_n.combined_sem(&var_lambda),
    })
}

/// Variance of the integrated limit intensity alone (no Cox draws).
pub fn integrated_rate_variance(spec: &ModelSpec, horizon: f64, h: f64, reps: usize, seed: u64) -> Result<McEstimate> {
    let diff = LimitDiffusion::from_spec(spec);
    let brownian = Streams::new(seed, domain::BROWNIAN);
    let lambdas = try_replicate(reps, |r| {
        em_integrated_rate(&diff, horizon, h, &mut brownian.stream(r)).map(|v| v.1)
    })?;
    Ok(variance_estimate(&lambdas))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointRow {
    pub t: f64,
    pub n: usize,
    pub w1: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointLimitReport {
    pub rows: Vec<JointRow>,
}

impl JointLimitReport {
    /// Each distance is below its predecessor plus one standard error of the
    /// difference. `None` for fewer than two rows.
    pub fn decreasing(&self) -> Option<bool> {
        (self.rows.len() >= 2).then(|| {
            self.rows
                .windows(2)
                .all(|w| w[1].w1.mean < w[0].w1.mean + w[0].w1.sem.hypot(w[1].w1.sem))
        })
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 100;

/// `W₁(law(X^{N_j}_{t_j}), λ)` along a schedule of `(t, N)` pairs.
pub fn joint_limit_experiment(
    spec: &ModelSpec,
    schedule: &[(f64, usize)],
    reps: usize,
    seed: u64,
) -> Result<JointLimitReport> {
    let density = InvariantDensity::from_spec(spec)?;
    let jumps = Streams::new(seed, domain::HAWKES);
    let boot = Streams::new(seed, domain::BOOTSTRAP);
    let mut rows = Vec::with_capacity(schedule.len());
    for (j, &(t, n)) in schedule.iter().enumerate() {
        let sys = spec.with_n(n)?;
        let samples = long_run_law(&sys, t, reps, &jumps.child(j as u64))?;
        let w1 = wasserstein1_with_sem(&samples, &density, BOOTSTRAP_RESAMPLES, &boot.child(j as u64))?;
        rows.push(JointRow { t, n, w1 });
    }
    Ok(JointLimitReport { rows })
}
