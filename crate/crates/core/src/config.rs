//! Plain-text run configuration.
//!
//! One `key = value` pair per line, `#` starts a comment. Keys are dotted
//! paths; lists are comma separated and schedules are `t:N` pairs.
//!
//! ```text
//! alpha = 1
//! rate.kind = quadratic
//! jump.kind = gaussian
//! jump.sigma = 1
//! n = 100
//! experiment = simulate
//! T = 10
//! seed = 42
//! ```
//!
//! Defaults are filled in at parse time, so [`RunConfig::emit`] writes the
//! fully resolved configuration and `parse(emit(c)) == c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::generators::TestFunction;
use crate::mc::Estimator;
use crate::model::{self, JumpDistribution, ModelSpec, RateFunction};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", match (.line, .key) {
    (Some(l), Some(k)) => format!("line {l}, key `{k}`: {}", .message),
    (Some(l), None) => format!("line {l}: {}", .message),
    (None, Some(k)) => format!("key `{k}`: {}", .message),
    (None, None) => .message.clone(),
})]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn key(key: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

/// Experiments selectable by the `experiment` key or a CLI subcommand.
pub const EXPERIMENTS: [&str; 9] = [
    "simulate-n",
    "simulate-limit",
    "generator-gap",
    "semigroup-rate",
    "invariant-law",
    "chaos-test",
    "joint-limit",
    "constants",
    "validate",
];

/// Canonical experiment name; `simulate` is accepted for `simulate-n`.
pub fn canonical_experiment(name: &str) -> Option<&'static str> {
    let name = if name == "simulate" { "simulate-n" } else { name };
    EXPERIMENTS.iter().copied().find(|e| *e == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateChoice {
    Quadratic,
    RootQuadratic,
    ArctanSq,
    Constant { c: f64 },
}

impl RateChoice {
    pub fn build(&self) -> crate::Result<RateFunction> {
        Ok(match *self {
            RateChoice::Quadratic => RateFunction::quadratic(),
            RateChoice::RootQuadratic => RateFunction::root_quadratic(),
            RateChoice::ArctanSq => RateFunction::arctan_sq(),
            RateChoice::Constant { c } => RateFunction::constant(c)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpChoice {
    Gaussian { sigma: f64 },
    TwoPoint { a: f64, b: f64, p: f64 },
}

impl JumpChoice {
    pub fn build(&self) -> crate::Result<JumpDistribution> {
        match *self {
            JumpChoice::Gaussian { sigma } => JumpDistribution::gaussian(sigma),
            JumpChoice::TwoPoint { a, b, p } => JumpDistribution::two_point(a, b, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub alpha: f64,
    pub rate: RateChoice,
    pub jump: JumpChoice,
    pub n: usize,
    pub x0: f64,
}

impl ModelSection {
    pub fn spec(&self) -> crate::Result<ModelSpec> {
        ModelSpec::new(self.alpha, self.rate.build()?, self.jump.build()?, self.n, self.x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSection {
    pub name: Option<String>,
    /// Simulation horizon `T`.
    pub horizon: f64,
    /// Euler–Maruyama step.
    pub h: f64,
    pub reps: usize,
    /// Evaluation time of semigroup and long-run experiments.
    pub t: f64,
    /// Test function name.
    pub g: String,
    pub n_grid: Vec<usize>,
    pub x_grid: Vec<f64>,
    pub schedule: Vec<(f64, usize)>,
    /// Components tracked by counting experiments.
    pub k: usize,
    pub epsilon: f64,
    /// Half-width of the validation grid.
    pub radius: f64,
    /// Observation times (moment curves) and horizons (constants).
    pub times: Vec<f64>,
    /// Overrides the Lipschitz constant of `√f` in `constants`.
    pub lipschitz: Option<f64>,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: String,
    pub emit_paths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub experiment: ExperimentSection,
    /// Left out of JSON echoes: where a run writes does not change what it
    /// computes.
    #[serde(skip_serializing)]
    pub output: OutputSection,
    pub seed: u64,
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "rate.kind",
    "rate.c",
    "rate.params",
    "jump.kind",
    "jump.sigma",
    "jump.a",
    "jump.b",
    "jump.p",
    "jump.params",
    "n",
    "x0",
    "experiment",
    "T",
    "h",
    "reps",
    "t",
    "g",
    "n_grid",
    "x_grid",
    "schedule",
    "k",
    "epsilon",
    "R",
    "times",
    "L",
    "estimator",
    "out.dir",
    "out.emit_paths",
    "seed",
];

/// Raw entries with the line each came from.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn read(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::at(line, key, "unknown key"));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, key, "empty value"));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(ConfigError::at(
                    line,
                    key,
                    format!("duplicate key (first set on line {first})"),
                ));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.0.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(line, key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parse(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::at(self.line(key), key, "must be finite")),
            _ => Ok(v),
        }
    }

    fn required_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?
            .ok_or_else(|| ConfigError::key(key, "missing required key"))
    }

    fn line(&self, key: &str) -> usize {
        self.0[key].0
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse()
                    .map_err(|_| ConfigError::at(line, key, format!("expected a list of {what}, bad item `{s}`")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

fn model_error(line: Option<usize>, key: &str, err: crate::Error) -> ConfigError {
    let message = match err {
        crate::Error::InvalidParameter(m) => m,
        other => other.to_string(),
    };
    ConfigError {
        line,
        key: Some(key.to_string()),
        message,
    }
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = Entries::read(text)?;

    let alpha = e.required_f64("alpha")?;
    if alpha <= 0.0 {
        return Err(ConfigError::at(e.line("alpha"), "alpha", "alpha must be positive"));
    }

    let rate_params: Option<Vec<f64>> = e.list("rate.params", "numbers")?;
    let rate = match e.raw("rate.kind") {
        None => return Err(ConfigError::key("rate.kind", "missing required key")),
        Some((_, "quadratic")) => RateChoice::Quadratic,
        Some((_, "root_quadratic")) => RateChoice::RootQuadratic,
        Some((_, "arctan_sq")) => RateChoice::ArctanSq,
        Some((_, "constant")) => {
            let c = match (e.f64("rate.c")?, rate_params.as_deref()) {
                (Some(c), _) => c,
                (None, Some([c])) => *c,
                (None, Some(_)) => {
                    return Err(ConfigError::at(
                        e.line("rate.params"),
                        "rate.params",
                        "expected one value `c`",
                    ))
                }
                (None, None) => return Err(ConfigError::key("rate.c", "missing required key for constant rate")),
            };
            RateChoice::Constant { c }
        }
        Some((line, other)) => {
            return Err(ConfigError::at(
                line,
                "rate.kind",
                format!("unknown rate `{other}` (quadratic, root_quadratic, arctan_sq, constant)"),
            ))
        }
    };

    let jump_params: Option<Vec<f64>> = e.list("jump.params", "numbers")?;
    let jump = match e.raw("jump.kind") {
        None => return Err(ConfigError::key("jump.kind", "missing required key")),
        Some((_, "gaussian")) => {
            let sigma = match (e.f64("jump.sigma")?, jump_params.as_deref()) {
                (Some(s), _) => s,
                (None, Some([s])) => *s,
                (None, Some(_)) => {
                    return Err(ConfigError::at(
                        e.line("jump.params"),
                        "jump.params",
                        "expected one value `sigma`",
                    ))
                }
                (None, None) => 1.0,
            };
            JumpChoice::Gaussian { sigma }
        }
        Some((_, "two_point")) => {
            let (a, b, p) = match (
                e.f64("jump.a")?,
                e.f64("jump.b")?,
                e.f64("jump.p")?,
                jump_params.as_deref(),
            ) {
                (Some(a), Some(b), p, _) => (a, b, p.unwrap_or(b / (b - a))),
                (None, None, None, Some([a, b])) => (*a, *b, b / (b - a)),
                (None, None, None, Some([a, b, p])) => (*a, *b, *p),
                (None, None, None, Some(_)) => {
                    return Err(ConfigError::at(
                        e.line("jump.params"),
                        "jump.params",
                        "expected `a, b` or `a, b, p`",
                    ))
                }
                _ => return Err(ConfigError::key("jump.a", "two_point needs both jump.a and jump.b")),
            };
            JumpChoice::TwoPoint { a, b, p }
        }
        Some((line, other)) => {
            return Err(ConfigError::at(
                line,
                "jump.kind",
                format!("unknown jump law `{other}` (gaussian, two_point)"),
            ))
        }
    };
    let jump_key = if e.raw("jump.params").is_some() {
        "jump.params"
    } else {
        "jump.kind"
    };
    let jump_law = jump
        .build()
        .map_err(|err| model_error(e.raw(jump_key).map(|r| r.0), jump_key, err))?;
    let rate_fn = rate
        .build()
        .map_err(|err| model_error(e.raw("rate.kind").map(|r| r.0), "rate.kind", err))?;

    let n: usize = e
        .parse("n", "a positive integer")?
        .ok_or_else(|| ConfigError::key("n", "missing required key"))?;
    if n == 0 {
        return Err(ConfigError::at(e.line("n"), "n", "n must be at least 1"));
    }
    let x0 = e.f64("x0")?.unwrap_or(0.0);

    let name = match e.raw("experiment") {
        None => None,
        Some((line, v)) => match canonical_experiment(v) {
            Some(_) => Some(v.to_string()),
            None => return Err(ConfigError::at(line, "experiment", format!("unknown experiment `{v}`"))),
        },
    };
    let positive = |key: &str, v: f64| {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::at(e.line(key), key, format!("{key} must be positive")))
        }
    };
    let horizon = match e.f64("T")? {
        Some(v) => positive("T", v)?,
        None => 10.0,
    };
    let h = match e.f64("h")? {
        Some(v) => positive("h", v)?,
        None => 1e-3,
    };
    let reps: usize = e.parse("reps", "a positive integer")?.unwrap_or(10_000);
    if reps == 0 {
        return Err(ConfigError::at(e.line("reps"), "reps", "reps must be at least 1"));
    }
    let t = match e.f64("t")? {
        Some(v) if v >= 0.0 => v,
        Some(_) => return Err(ConfigError::at(e.line("t"), "t", "t must be nonnegative")),
        None => 2.0,
    };
    let g: String = e
        .parse("g", "a test function name")?
        .unwrap_or_else(|| "sin".to_string());
    if let Err(err) = TestFunction::builtin(&g) {
        return Err(model_error(e.raw("g").map(|r| r.0), "g", err));
    }
    let n_grid: Vec<usize> = e
        .list("n_grid", "positive integers")?
        .unwrap_or_else(|| vec![10, 40, 160, 640]);
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(ConfigError::at(
            e.line("n_grid"),
            "n_grid",
            "entries must be at least 1",
        ));
    }
    let x_grid: Vec<f64> = e
        .list("x_grid", "numbers")?
        .unwrap_or_else(|| (-3..=3).map(f64::from).collect());
    let schedule = match e.raw("schedule") {
        None => vec![(2.0, 25), (5.0, 100), (10.0, 400)],
        Some((line, v)) => v
            .split(',')
            .map(|item| {
                let item = item.trim();
                let bad = || ConfigError::at(line, "schedule", format!("expected `t:N` pairs, bad item `{item}`"));
                let (t, n) = item.split_once(':').ok_or_else(bad)?;
                let t: f64 = t.trim().parse().map_err(|_| bad())?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                if t > 0.0 && t.is_finite() && n > 0 {
                    Ok((t, n))
                } else {
                    Err(bad())
                }
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let k: usize = e.parse("k", "a positive integer")?.unwrap_or(2);
    if k == 0 {
        return Err(ConfigError::at(e.line("k"), "k", "k must be at least 1"));
    }
    let lipschitz = match e.f64("L")? {
        Some(v) if v >= 0.0 => Some(v),
        Some(_) => return Err(ConfigError::at(e.line("L"), "L", "L must be nonnegative")),
        None => None,
    };
    let epsilon = match e.f64("epsilon")? {
        Some(v) => positive("epsilon", v)?,
        None => model::default_epsilon(
            alpha,
            jump_law.variance(),
            lipschitz.unwrap_or(rate_fn.lipschitz_sqrt()),
        ),
    };
    let radius = match e.f64("R")? {
        Some(v) => positive("R", v)?,
        None => 20.0,
    };
    let times: Vec<f64> = e.list("times", "numbers")?.unwrap_or_else(|| vec![1.0, 10.0]);
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ConfigError::at(
            e.line("times"),
            "times",
            "times must be nonnegative and sorted",
        ));
    }
    let estimator = match e.raw("estimator") {
        None | Some((_, "plain")) => Estimator::Plain,
        Some((_, "control_variate")) => Estimator::ControlVariate,
        Some((line, v)) => {
            return Err(ConfigError::at(
                line,
                "estimator",
                format!("unknown estimator `{v}` (plain, control_variate)"),
            ))
        }
    };

    let dir: String = e.parse("out.dir", "a path")?.unwrap_or_else(|| "out".to_string());
    let emit_paths: bool = e.parse("out.emit_paths", "true or false")?.unwrap_or(false);
    let seed: u64 = e.parse("seed", "an unsigned 64-bit integer")?.unwrap_or(0);

    let config = RunConfig {
        model: ModelSection {
            alpha,
            rate,
            jump,
            n,
            x0,
        },
        experiment: ExperimentSection {
            name,
            horizon,
            h,
            reps,
            t,
            g,
            n_grid,
            x_grid,
            schedule,
            k,
            epsilon,
            radius,
            times,
            lipschitz,
            estimator,
        },
        output: OutputSection { dir, emit_paths },
        seed,
    };
    config.model.spec().map_err(|err| model_error(None, "model", err))?;
    Ok(config)
}

fn join<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Fully resolved configuration in the input format.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let x = &self.experiment;
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("alpha", format!("{:?}", m.alpha));
        match m.rate {
            RateChoice::Quadratic => kv("rate.kind", "quadratic".into()),
            RateChoice::RootQuadratic => kv("rate.kind", "root_quadratic".into()),
            RateChoice::ArctanSq => kv("rate.kind", "arctan_sq".into()),
            RateChoice::Constant { c } => {
                kv("rate.kind", "constant".into());
                kv("rate.c", format!("{c:?}"));
            }
        }
        match m.jump {
            JumpChoice::Gaussian { sigma } => {
                kv("jump.kind", "gaussian".into());
                kv("jump.sigma", format!("{sigma:?}"));
            }
            JumpChoice::TwoPoint { a, b, p } => {
                kv("jump.kind", "two_point".into());
                kv("jump.a", format!("{a:?}"));
                kv("jump.b", format!("{b:?}"));
                kv("jump.p", format!("{p:?}"));
            }
        }
        kv("n", m.n.to_string());
        kv("x0", format!("{:?}", m.x0));
        if let Some(name) = &x.name {
            kv("experiment", name.clone());
        }
        kv("T", format!("{:?}", x.horizon));
        kv("h", format!("{:?}", x.h));
        kv("reps", x.reps.to_string());
        kv("t", format!("{:?}", x.t));
        kv("g", x.g.clone());
        kv("n_grid", join(&x.n_grid));
        kv("x_grid", join(&x.x_grid));
        kv(
            "schedule",
            x.schedule
                .iter()
                .map(|(t, n)| format!("{t:?}:{n}"))
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv("k", x.k.to_string());
        kv("epsilon", format!("{:?}", x.epsilon));
        kv("R", format!("{:?}", x.radius));
        kv("times", join(&x.times));
        if let Some(l) = x.lipschitz {
            kv("L", format!("{l:?}"));
        }
        let est = match x.estimator {
            Estimator::Plain => "plain",
            Estimator::ControlVariate => "control_variate",
        };
        kv("estimator", est.into());
        kv("out.dir", self.output.dir.clone());
        kv("out.emit_paths", self.output.emit_paths.to_string());
        s
    }

    pub fn spec(&self) -> crate::Result<ModelSpec> {
        self.model.spec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "alpha=1\nrate.kind=quadratic\njump.kind=gaussian\njump.sigma=1\nn=100\nexperiment=simulate\nT=10\nseed=42\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model.x0, 0.0);
        assert_eq!(c.experiment.h, 1e-3);
        assert_eq!(c.experiment.radius, 20.0);
        assert_eq!(c.experiment.horizon, 10.0);
        assert_eq!(c.seed, 42);
        // 2α − σ²L² = 1 > 0, so ε = 1/2.
        assert_eq!(c.experiment.epsilon, 0.5);
        assert_eq!(
            canonical_experiment(c.experiment.name.as_deref().unwrap()),
            Some("simulate-n")
        );
    }

    #[test]
    fn missing_alpha_names_the_key() {
        let err = parse_config("rate.kind=quadratic\njump.kind=gaussian\nn=3\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("alpha"));
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn negative_alpha_rejected_with_line() {
        let err = parse_config(&MINIMAL.replace("alpha=1", "alpha=-1")).unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.to_string().contains("alpha must be positive"), "{err}");
    }

    #[test]
    fn unknown_key_and_bad_syntax() {
        let err = parse_config(&format!("{MINIMAL}bogus = 3\n")).unwrap_err();
        assert_eq!((err.line, err.key.as_deref()), (Some(9), Some("bogus")));
        let err = parse_config(&format!("{MINIMAL}no equals sign\n")).unwrap_err();
        assert_eq!(err.line, Some(9));
        let err = parse_config(&format!("{MINIMAL}n = 4\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn params_shorthand_and_comments() {
        let text = "# two-point marks\nalpha = 2 # decay\nrate.kind = quadratic\njump.kind = two_point\njump.params = 2, -1\nn = 10\nschedule = 2:25, 5:100\n";
        let c = parse_config(text).unwrap();
        assert_eq!(
            c.model.jump,
            JumpChoice::TwoPoint {
                a: 2.0,
                b: -1.0,
                p: 1.0 / 3.0
            }
        );
        assert_eq!(c.experiment.schedule, vec![(2.0, 25), (5.0, 100)]);
    }

    #[test]
    fn uncentered_two_point_rejected() {
        let text = "alpha=2\nrate.kind=quadratic\njump.kind=two_point\njump.a=2\njump.b=-1\njump.p=0.5\nn=10\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("centered"), "{err}");
    }

    #[test]
    fn emit_round_trips() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.emit()).unwrap(), c);
    }
}
