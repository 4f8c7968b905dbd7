//! Command-line runner. Each experiment writes `summary.json` and the
//! resolved configuration `config.txt` to the output directory, plus CSV
//! tables where the experiment produces paths or densities.
//!
//! Exit codes: 0 success, 1 failed assertion, 2 configuration error,
//! 3 runtime abort.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{canonical_experiment, parse_config, RunConfig, EXPERIMENTS};
use crate::error::Error;
use crate::generators::{gap_check, TestFunction};
use crate::hawkes;
use crate::io;
use crate::limit::{self, LimitDiffusion};
use crate::mc;
use crate::model::{self, ModelSpec, RateKind, ValidationGrid};
use crate::rng::{domain, Streams};
use crate::stationary::{long_run_law, wasserstein1_with_sem, InvariantDensity};
use crate::stats::{try_replicate, McEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const WORKERS_ENV: &str = "HAWKES_DIFFUSIVE_WORKERS";

/// Acceptance band of the fitted semigroup rate.
pub const RATE_BAND: (f64, f64) = (-0.7, -0.3);
/// Target and tolerance of the generator-gap slope.
pub const GAP_SLOPE: (f64, f64) = (-0.5, 0.05);
/// Threshold on `W₁` to the invariant law in `invariant-law`.
pub const W1_THRESHOLD: f64 = 0.05;
/// Tolerance on the total mass of the tabulated density.
pub const MASS_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "hawkes-diffusive",
    version,
    about = "Mean-field Hawkes systems and their diffusion limit"
)]
pub struct Cli {
    /// Experiment to run; falls back to the `experiment` key of the config.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENTS.iter().copied().chain(["simulate"])))]
    pub experiment: Option<String>,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `out.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; wall time only, never output bytes.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Writes path CSVs for experiments that make them optional.
    #[arg(long)]
    pub emit_paths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl Assertion {
    /// `lhs ≤ rhs + tol`.
    pub fn at_most(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: lhs <= rhs + tol,
            lhs,
            rhs,
            tol,
        }
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn close(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: (lhs - rhs).abs() <= tol,
            lhs,
            rhs,
            tol,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        let v = if pass { 1.0 } else { 0.0 };
        Self {
            name: name.into(),
            pass,
            lhs: v,
            rhs: 1.0,
            tol: 0.0,
        }
    }
}

/// Contents of `summary.json`. Nothing here depends on the worker count.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config_echo: RunConfig,
    pub seed: u64,
    pub tables: Value,
    pub assertions: Vec<Assertion>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }
}

/// A finished run: the summary plus CSV files to write, keyed by file name.
pub struct Outcome {
    pub summary: Summary,
    pub files: BTreeMap<String, String>,
}

/// Failure of [`run`], mapped onto exit codes by [`RunError::exit_code`].
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Runtime(Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Runtime(_) | RunError::Io(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Runtime(e) => write!(f, "runtime abort: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::UnsupportedJumpLaw(m) => RunError::Config(m),
            other => RunError::Runtime(other),
        }
    }
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String, RunError> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(RunError::Io)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

/// `f ≤ c₀ + c₂x²` for the builtin rates.
fn quadratic_majorant(kind: &RateKind) -> Option<(f64, f64)> {
    match kind {
        RateKind::Quadratic => Some((1.0, 1.0)),
        RateKind::RootQuadratic => Some((1.0, 0.5)),
        RateKind::ArctanSq => Some((std::f64::consts::PI * std::f64::consts::PI, 0.0)),
        RateKind::Constant(c) => Some((*c, 0.0)),
        RateKind::UserDefined(_) => None,
    }
}

/// Solution of `m′ = −2αm + σ²(c₀ + c₂m)`, `m(0) = x₀²`. For the `N`-system
/// with `f = c₀ + c₂x²` this is `E[(X^N_t)²]` exactly; otherwise it bounds it.
fn second_moment_ode(spec: &ModelSpec, c0: f64, c2: f64, t: f64) -> f64 {
    let s2 = spec.sigma2();
    let r = 2.0 * spec.alpha - s2 * c2;
    let m0 = spec.x0 * spec.x0;
    if r.abs() < 1e-14 {
        return m0 + s2 * c0 * t;
    }
    let m_inf = s2 * c0 / r;
    m_inf + (m0 - m_inf) * (-r * t).exp()
}

/// The same recursion for Euler–Maruyama: `m ← ((1 − αh)² + σ²c₂h) m + σ²c₀h`.
fn second_moment_em(spec: &ModelSpec, c0: f64, c2: f64, steps: usize, h: f64) -> f64 {
    let s2 = spec.sigma2();
    let a = (1.0 - spec.alpha * h).powi(2) + s2 * c2 * h;
    (0..steps).fold(spec.x0 * spec.x0, |m, _| a * m + s2 * c0 * h)
}

/// Runs one experiment; no files are touched.
pub fn run(experiment: &str, config: &RunConfig) -> Result<Outcome, RunError> {
    let name = canonical_experiment(experiment)
        .ok_or_else(|| RunError::Config(format!("unknown experiment `{experiment}`")))?;
    let spec = config.spec()?;
    let x = &config.experiment;
    let seed = config.seed;
    let mut files = BTreeMap::new();
    let mut assertions = Vec::new();

    let tables = match name {
        "simulate-n" => {
            let (skel, log) = hawkes::simulate(&spec, x.horizon, &mut Streams::new(seed, domain::HAWKES).stream(0))?;
            files.insert("events.csv".into(), csv_string(|p| io::write_events(p, &log))?);
            files.insert("path.csv".into(), csv_string(|p| io::write_skeleton(p, &skel))?);
            let moments = Streams::new(seed, domain::HAWKES).child(1);
            let sq = try_replicate(x.reps, |r| {
                hawkes::terminal_state(&spec, x.horizon, &mut moments.stream(r)).map(|v| v * v)
            })?;
            let m2 = McEstimate::from_samples(&sq);
            let mut t = json!({
                "events": log.len(),
                "terminal": skel.terminal(),
                "max_abs_x": skel.anchors.iter().map(|a| a.1.abs()).fold(0.0, f64::max),
                "second_moment": m2,
            });
            if let Some((c0, c2)) = quadratic_majorant(spec.rate.kind()) {
                let bound = second_moment_ode(&spec, c0, c2, x.horizon).max(spec.x0 * spec.x0);
                t["second_moment_bound"] = json!(bound);
                assertions.push(Assertion::at_most(
                    "second_moment_bounded",
                    m2.mean,
                    bound,
                    4.0 * m2.sem,
                ));
            }
            t
        }
        "simulate-limit" => {
            let diff = LimitDiffusion::from_spec(&spec);
            let path = limit::simulate_em(
                &diff,
                x.horizon,
                x.h,
                &mut Streams::new(seed, domain::BROWNIAN).stream(0),
            )?;
            let cox = limit::cox_counts(&path, &diff.rate, x.k, &mut Streams::new(seed, domain::COX).stream(0));
            files.insert("path.csv".into(), csv_string(|p| io::write_grid_path(p, &path))?);
            files.insert("cox.csv".into(), csv_string(|p| io::write_cox(p, &cox))?);
            let moments = Streams::new(seed, domain::BROWNIAN).child(1);
            let sq = try_replicate(x.reps, |r| {
                limit::simulate_em(&diff, x.horizon, x.h, &mut moments.stream(r)).map(|p| p.terminal().powi(2))
            })?;
            let m2 = McEstimate::from_samples(&sq);
            let counts: Vec<usize> = (1..=x.k).map(|c| cox.count(c)).collect();
            let mut t = json!({
                "steps": path.steps(),
                "terminal": path.terminal(),
                "cox_counts": counts,
                "second_moment": m2,
            });
            if let Some((c0, c2)) = quadratic_majorant(spec.rate.kind()) {
                let steps = limit::step_count(x.horizon, x.h);
                let bound = second_moment_em(&spec, c0, c2, steps, x.h).max(spec.x0 * spec.x0);
                t["second_moment_bound"] = json!(bound);
                assertions.push(Assertion::at_most(
                    "second_moment_bounded",
                    m2.mean,
                    bound,
                    4.0 * m2.sem,
                ));
            }
            t
        }
        "generator-gap" => {
            let g = TestFunction::builtin(&x.g)?;
            let report = gap_check(&g, &spec, &x.x_grid, &x.n_grid)?;
            assertions.push(Assertion::at_most("gap_within_bound", report.worst_ratio, 1.0, 0.0));
            let third = skewness_sign(&config.model.jump);
            if let (Some(slope), true) = (report.slope, third) {
                assertions.push(Assertion::close("gap_slope", slope, GAP_SLOPE.0, GAP_SLOPE.1));
            }
            serde_json::to_value(&report).expect("report serialises")
        }
        "semigroup-rate" => {
            let g = TestFunction::builtin(&x.g)?;
            let (rows, limit) = mc::rate_table(&spec, &g, x.t, &x.n_grid, x.reps, x.h, seed, x.estimator)?;
            match mc::rate_report(rows.clone(), limit) {
                Ok(report) => {
                    let (lo, hi) = RATE_BAND;
                    assertions.push(Assertion::close(
                        "rate_slope",
                        report.fit.slope,
                        0.5 * (lo + hi),
                        0.5 * (hi - lo),
                    ));
                    assertions.push(Assertion::at_most(
                        "halving_within_3sem",
                        report.limit.halving.mean.abs(),
                        0.0,
                        3.0 * report.limit.estimate.sem.max(report.limit.halving.sem),
                    ));
                    assertions.push(Assertion::flag("step_fine_enough", report.step_fine_enough));
                    serde_json::to_value(&report).expect("report serialises")
                }
                Err(Error::Unresolvable { resolvable }) => {
                    assertions.push(Assertion::at_most("resolvable_rows", 3.0, resolvable as f64, 0.0));
                    json!({ "rows": rows, "limit": limit, "resolvable_rows": resolvable })
                }
                Err(e) => return Err(e.into()),
            }
        }
        "invariant-law" => {
            let density = InvariantDensity::from_spec(&spec)?;
            files.insert("density.csv".into(), csv_string(|p| io::write_density(p, &density))?);
            let mass = density.expect(|_| 1.0);
            assertions.push(Assertion::close("density_mass", mass, 1.0, MASS_TOL));
            let samples = long_run_law(&spec, x.t, x.reps, &Streams::new(seed, domain::HAWKES))?;
            let w1 = wasserstein1_with_sem(
                &samples,
                &density,
                mc::BOOTSTRAP_RESAMPLES,
                &Streams::new(seed, domain::BOOTSTRAP),
            )?;
            assertions.push(Assertion::at_most("w1_below_threshold", w1.mean, W1_THRESHOLD, 0.0));
            json!({
                "normaliser": density.normaliser(),
                "radius": density.radius(),
                "mass": mass,
                "w1": w1,
                "n": spec.n_components,
                "t": x.t,
            })
        }
        "chaos-test" => {
            let report = mc::chaos_covariance(&spec, x.horizon, x.k, x.h, x.reps, seed)?;
            assertions.push(Assertion::close(
                "cov_matches_var_lambda",
                report.cov_n.mean,
                report.var_lambda.mean,
                4.0 * report.combined_sem,
            ));
            serde_json::to_value(report).expect("report serialises")
        }
        "joint-limit" => {
            let report = mc::joint_limit_experiment(&spec, &x.schedule, x.reps, seed)?;
            if let Some(dec) = report.decreasing() {
                assertions.push(Assertion::flag("w1_decreasing", dec));
            }
            json!({ "sharp_regime": spec.sharp_regime(), "rows": report.rows })
        }
        "constants" => {
            let lip = x.lipschitz.unwrap_or(spec.rate.lipschitz_sqrt());
            let s2 = spec.sigma2();
            let mut k = serde_json::Map::new();
            for &t in &x.times {
                k.insert(format!("{t:?}"), json!(model::k_t(spec.alpha, s2, lip, t, x.epsilon)?));
            }
            json!({
                "beta": model::beta(spec.alpha, s2, lip),
                "epsilon": x.epsilon,
                "sharp_regime": model::sharp_regime(spec.alpha, s2, lip),
                "L": lip,
                "K": k,
            })
        }
        "validate" => {
            let grid = ValidationGrid {
                radius: x.radius,
                ..ValidationGrid::default()
            };
            let diag = model::validate_with(&spec, grid);
            for c in &diag.checks {
                assertions.push(Assertion::flag(&c.name, c.pass));
            }
            serde_json::to_value(&diag).expect("diagnostics serialise")
        }
        _ => unreachable!("canonical names are exhaustive"),
    };

    if config.output.emit_paths && matches!(name, "semigroup-rate" | "chaos-test" | "joint-limit" | "invariant-law") {
        let (skel, log) = hawkes::simulate(
            &spec,
            x.horizon,
            &mut Streams::new(seed, domain::HAWKES).child(u64::MAX).stream(0),
        )?;
        files.insert("events.csv".into(), csv_string(|p| io::write_events(p, &log))?);
        files.insert("path.csv".into(), csv_string(|p| io::write_skeleton(p, &skel))?);
    }

    let summary = Summary {
        experiment: name.to_string(),
        config_echo: config.clone(),
        seed,
        tables,
        assertions,
    };
    Ok(Outcome { summary, files })
}

/// Whether the mark law has a nonzero third moment, the case where the
/// generator gap scales as `N^{-1/2}`.
fn skewness_sign(jump: &crate::config::JumpChoice) -> bool {
    match *jump {
        crate::config::JumpChoice::Gaussian { .. } => false,
        crate::config::JumpChoice::TwoPoint { a, b, p } => {
            let m3 = p * a.powi(3) + (1.0 - p) * b.powi(3);
            m3.abs() > 1e-12 * a.abs().max(b.abs()).powi(3)
        }
    }
}

/// Writes the outcome into `dir`.
pub fn write_outcome(dir: &Path, config: &RunConfig, outcome: &Outcome) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(RunError::Io)?;
    fs::write(dir.join("summary.json"), outcome.summary.to_json()).map_err(RunError::Io)?;
    fs::write(dir.join("config.txt"), config.emit()).map_err(RunError::Io)?;
    for (name, text) in &outcome.files {
        fs::write(dir.join(name), text).map_err(RunError::Io)?;
    }
    Ok(())
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(w) = flag {
        return if w == 0 {
            Err("--workers must be at least 1".into())
        } else {
            Ok(Some(w))
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(None),
    }
}

/// Full CLI: parses arguments, runs, writes artifacts, returns the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("configuration error: cannot read {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.display().to_string();
    }
    if cli.emit_paths {
        config.output.emit_paths = true;
    }
    let Some(experiment) = cli.experiment.clone().or_else(|| config.experiment.name.clone()) else {
        eprintln!("configuration error: no experiment given on the command line or in the config");
        return EXIT_CONFIG;
    };
    let workers = match resolve_workers(cli.workers) {
        Ok(w) => w,
        Err(m) => {
            eprintln!("configuration error: {m}");
            return EXIT_CONFIG;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("runtime abort: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    let result = pool.install(|| run(&experiment, &config));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let dir = PathBuf::from(&config.output.dir);
    if let Err(e) = write_outcome(&dir, &config, &outcome) {
        eprintln!("{e}");
        return e.exit_code();
    }
    for a in &outcome.summary.assertions {
        println!(
            "{} {}: lhs={} rhs={} tol={}",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.lhs,
            a.rhs,
            a.tol
        );
    }
    println!("wrote {}", dir.join("summary.json").display());
    if outcome.summary.passed() {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    }
}
