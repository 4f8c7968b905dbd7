//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --release --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use hawkes_diffusive::cli::{self, Outcome};
use hawkes_diffusive::config::parse_config;
use hawkes_diffusive::generators::{gap_check, TestFunction, GAP_TOLERANCE};
use hawkes_diffusive::hawkes;
use hawkes_diffusive::mc::{chaos_covariance, joint_limit_experiment};
use hawkes_diffusive::model::{beta, default_epsilon, k_t, sharp_regime};
use hawkes_diffusive::rng::{domain, Streams};
use hawkes_diffusive::stationary::InvariantDensity;
use hawkes_diffusive::stats::{ks_pvalue, ks_statistic, replicate, variance_estimate, McEstimate};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};
use statrs::distribution::{ContinuousCDF, Exp};

mod common;
use common::k_t_oracle;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Unit-variance two-point marks: `√2` w.p. 1/3, `−1/√2` w.p. 2/3.
fn unit_two_point() -> JumpDistribution {
    JumpDistribution::two_point(std::f64::consts::SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 1.0 / 3.0).unwrap()
}

const RATE_CONFIG: &str = "\
alpha = 2
rate.kind = quadratic
jump.kind = two_point
jump.params = 1.4142135623730951, -0.7071067811865476
n = 10
x0 = 1
t = 2
g = sin
n_grid = 10, 40, 160, 640
reps = 1000000
h = 0.001
estimator = control_variate
seed = 7
";

fn run_in_pool(threads: usize, experiment: &str, text: &str) -> Result<Outcome, String> {
    let config = parse_config(text).map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| cli::run(experiment, &config))
        .map_err(|e| e.to_string())
}

fn generator_gap() -> Check {
    let spec = ModelSpec::new(
        1.0,
        RateFunction::quadratic(),
        JumpDistribution::two_point(2.0, -1.0, 1.0 / 3.0).unwrap(),
        1,
        0.0,
    )
    .map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (-3..=3).map(f64::from).collect();
    let report = gap_check(&TestFunction::sin(), &spec, &xs, &[10, 100, 1000, 10_000]).map_err(|e| e.to_string())?;
    let within = report.table.iter().all(|r| r.gap <= r.bound + GAP_TOLERANCE);
    let slope = report.slope.unwrap_or(f64::NAN);
    ensure(
        within && (slope + 0.5).abs() <= 0.05,
        format!(
            "{} points within bound: {within}, worst ratio {:.4}, slope {slope:.4}",
            report.table.len(),
            report.worst_ratio
        ),
    )
}

fn semigroup_rate(outcome: &Outcome) -> Check {
    let t = &outcome.summary.tables;
    let slope = t["fit"]["slope"].as_f64().unwrap_or(f64::NAN);
    let rows: Vec<String> = t["rows"]
        .as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    format!(
                        "N={} err={:.5}±{:.5}",
                        r["n"],
                        r["error"].as_f64().unwrap_or(f64::NAN),
                        r["sem"].as_f64().unwrap_or(f64::NAN)
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    let failed: Vec<&str> = outcome
        .summary
        .assertions
        .iter()
        .filter(|a| !a.pass)
        .map(|a| a.name.as_str())
        .collect();
    ensure(
        outcome.summary.passed(),
        format!(
            "slope {slope:.3} (band [-0.7, -0.3]); {}; halving {:.2e}; failed: {failed:?}",
            rows.join(", "),
            t["limit"]["halving"]["mean"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn invariant_law() -> Check {
    let density = InvariantDensity::new(2.0, 1.0, RateFunction::quadratic()).map_err(|e| e.to_string())?;
    let c = 8.0 / (3.0 * std::f64::consts::PI);
    let worst = (0..=400)
        .map(|i| -20.0 + 0.1 * i as f64)
        .map(|x| (density.pdf(x) - c * (1.0 + x * x).powi(-3)).abs())
        .fold(0.0, f64::max);
    let cfg = "alpha = 2\nrate.kind = quadratic\njump.kind = gaussian\nn = 200\nt = 30\nreps = 10000\nseed = 3\n";
    let outcome = run_in_pool(1, "invariant-law", cfg)?;
    let w1 = outcome.summary.tables["w1"]["mean"].as_f64().unwrap_or(f64::NAN);
    ensure(
        worst < 1e-8 && w1 < 0.05 && outcome.summary.passed(),
        format!(
            "max |p − (8/(3π))(1+x²)⁻³| = {worst:.2e}, mass {:.12}, W1 = {w1:.4}",
            outcome.summary.tables["mass"]
        ),
    )
}

fn exact_oracles() -> Check {
    let flat = |n: usize, alpha: f64, x0: f64| {
        ModelSpec::new(
            alpha,
            RateFunction::constant(1.0).unwrap(),
            JumpDistribution::gaussian(1.0).unwrap(),
            n,
            x0,
        )
        .unwrap()
    };
    // (a) N = 50, T = 2: counts ~ Poisson(100), gaps ~ Exp(50).
    let spec = flat(50, 1.0, 0.0);
    let s = Streams::new(41, domain::HAWKES);
    let runs = replicate(2000, |r| hawkes::event_times(&spec, 2.0, &mut s.stream(r)).unwrap());
    let counts: Vec<f64> = runs.iter().map(|ts| ts.len() as f64).collect();
    let gaps: Vec<f64> = runs.iter().flat_map(|ts| ts.windows(2).map(|w| w[1] - w[0])).collect();
    let mean = McEstimate::from_samples(&counts);
    let var = variance_estimate(&counts);
    let law = Exp::new(50.0).unwrap();
    let d = ks_statistic(&gaps, |x| law.cdf(x)).map_err(|e| e.to_string())?;
    let p = ks_pvalue(d, gaps.len());
    // (b) N = 100, α = 1, x₀ = 1, t = 1 against the OU Gaussian.
    let spec = flat(100, 1.0, 1.0);
    let s = Streams::new(42, domain::HAWKES);
    let xs = replicate(20_000, |r| {
        hawkes::terminal_state(&spec, 1.0, &mut s.stream(r)).unwrap()
    });
    let ou_mean = (-1.0f64).exp();
    let ou_var = (1.0 - (-2.0f64).exp()) / 2.0;
    let m = McEstimate::from_samples(&xs);
    let v = variance_estimate(&xs);
    ensure(
        mean.within(100.0, 4.0) && var.within(100.0, 4.0) && p > 1e-3 && m.within(ou_mean, 4.0) && v.within(ou_var, 4.0),
        format!(
            "count mean {:.2}±{:.2}, var {:.1}±{:.1}, KS p = {p:.3} over {} gaps; OU mean {:.4}±{:.4} vs {ou_mean:.4}, var {:.4}±{:.4} vs {ou_var:.4}",
            mean.mean, mean.sem, var.mean, var.sem, gaps.len(), m.mean, m.sem, v.mean, v.sem
        ),
    )
}

fn conditional_chaos() -> Check {
    let quad = ModelSpec::new(
        2.0,
        RateFunction::quadratic(),
        JumpDistribution::gaussian(1.0).unwrap(),
        400,
        0.0,
    )
    .unwrap();
    let r = chaos_covariance(&quad, 2.0, 2, 1e-3, 100_000, 51).map_err(|e| e.to_string())?;
    let flat = ModelSpec::new(
        2.0,
        RateFunction::constant(1.0).unwrap(),
        JumpDistribution::gaussian(1.0).unwrap(),
        400,
        0.0,
    )
    .unwrap();
    let f = chaos_covariance(&flat, 2.0, 2, 1e-3, 100_000, 52).map_err(|e| e.to_string())?;
    ensure(
        r.agrees() && f.cov_n.within(0.0, 4.0),
        format!(
            "cov_N {:.5}±{:.5} vs var_λ {:.5}±{:.5} (|Δ| = {:.2} sem); constant rate cov {:.5}±{:.5}",
            r.cov_n.mean,
            r.cov_n.sem,
            r.var_lambda.mean,
            r.var_lambda.sem,
            r.discrepancy() / r.combined_sem,
            f.cov_n.mean,
            f.cov_n.sem
        ),
    )
}

fn joint_limit() -> Check {
    let spec = ModelSpec::new(2.0, RateFunction::quadratic(), unit_two_point(), 25, 0.0).unwrap();
    let report =
        joint_limit_experiment(&spec, &[(2.0, 25), (5.0, 100), (10.0, 400)], 100_000, 5).map_err(|e| e.to_string())?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("(t={}, N={}) {:.5}±{:.5}", r.t, r.n, r.w1.mean, r.w1.sem))
        .collect();
    ensure(
        spec.sharp_regime() && report.decreasing() == Some(true),
        format!("sharp regime {}; W1 {}", spec.sharp_regime(), rows.join(" > ")),
    )
}

fn constants() -> Check {
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };
    check("beta(1,1,1) = 0.5", beta(1.0, 1.0, 1.0) == 0.5);
    check("beta(2,1,1) = -1.5", beta(2.0, 1.0, 1.0) == -1.5);
    check("beta(1,1,0) = -1", beta(1.0, 1.0, 0.0) == -1.0);
    let alphas: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    check(
        "beta nonincreasing in alpha",
        alphas.windows(2).all(|w| beta(w[1], 1.3, 0.8) <= beta(w[0], 1.3, 0.8)),
    );
    check("epsilon(2,1,1) = 1.5", default_epsilon(2.0, 1.0, 1.0) == 1.5);
    check("epsilon(0.25,1,1) = 1", default_epsilon(0.25, 1.0, 1.0) == 1.0);
    check("sharp(2,1,1)", sharp_regime(2.0, 1.0, 1.0));
    check("not sharp(1,1,1)", !sharp_regime(1.0, 1.0, 1.0));
    let k = |t: f64| k_t(2.0, 1.0, 1.0, t, 0.5).unwrap_or(f64::NAN);
    check("K_0 = 0", k(0.0) == 0.0);
    check(
        "K_5 >= K_1 >= K_0.1 > 0",
        k(5.0) >= k(1.0) && k(1.0) >= k(0.1) && k(0.1) > 0.0,
    );
    let e = default_epsilon(2.0, 1.0, 1.0);
    let plateau: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| k_t(2.0, 1.0, 1.0, t, e).unwrap_or(f64::NAN))
        .collect();
    check(
        "sharp plateau",
        (plateau[1] - plateau[0]).abs() > 10.0 * (plateau[2] - plateau[1]).abs()
            && (plateau[3] - plateau[2]).abs() <= (plateau[2] - plateau[1]).abs(),
    );

    let tuples = [
        (2.0, 1.0, 1.0, 1.0, 0.5),
        (1.0, 1.0, 1.0, 2.0, 1.0),
        (0.5, 2.0, 0.5, 3.0, 0.25),
    ];
    let mut worst = 0.0f64;
    for (a, s2, l, t, eps) in tuples {
        let got = k_t(a, s2, l, t, eps).unwrap_or(f64::NAN);
        worst = worst.max(((got - k_t_oracle(a, s2, l, t, eps)) / got).abs());
    }
    check("K_T vs Gauss–Legendre", worst < 1e-8);
    ensure(
        fails.is_empty(),
        format!("worst relative K_T deviation {worst:.1e}; failed: {fails:?}"),
    )
}

fn reproducibility(first: &Outcome) -> Check {
    let second = run_in_pool(2, "semigroup-rate", RATE_CONFIG)?;
    let (a, b) = (first.summary.to_json(), second.summary.to_json());
    ensure(
        a == b,
        format!(
            "1 vs 2 workers: {} and {} bytes, identical = {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, started: Instant, result: Check| {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id} {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                all = false;
                println!("FAIL {id} {name} [{secs:.1}s]: {detail}");
            }
        }
    };

    let t = Instant::now();
    report(1, "generator-gap", t, generator_gap());
    let t = Instant::now();
    report(7, "constants", t, constants());
    let t = Instant::now();
    report(4, "exact-oracles", t, exact_oracles());
    let t = Instant::now();
    report(3, "invariant-law", t, invariant_law());
    let t = Instant::now();
    report(5, "conditional-chaos", t, conditional_chaos());
    let t = Instant::now();
    report(6, "joint-limit", t, joint_limit());
    let t = Instant::now();
    let rate = run_in_pool(1, "semigroup-rate", RATE_CONFIG);
    match &rate {
        Ok(outcome) => report(2, "semigroup-rate", t, semigroup_rate(outcome)),
        Err(e) => report(2, "semigroup-rate", t, Err(e.clone())),
    }
    let t = Instant::now();
    match &rate {
        Ok(outcome) => report(8, "reproducibility", t, reproducibility(outcome)),
        Err(e) => report(8, "reproducibility", t, Err(format!("criterion 2 run failed: {e}"))),
    }

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
