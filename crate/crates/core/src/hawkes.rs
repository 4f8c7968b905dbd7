//! Exact event-driven simulation of the `N`-component system.
//!
//! Between events the shared potential decays as `x e^{−αt}`; events arrive
//! with total rate `N f(X_{t−})`, each carrying a mark `u ~ μ` that moves the
//! potential by `u/√N`. Events are generated by thinning against the
//! envelope `N F(|x|)`, which dominates the rate along the decaying flow.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// One accepted event. Components are labelled `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub component: u32,
    pub mark: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub horizon: f64,
    pub n_components: usize,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of events of `component` up to and including `t`.
    pub fn count(&self, component: u32, t: f64) -> usize {
        self.events
            .iter()
            .take_while(|e| e.t <= t)
            .filter(|e| e.component == component)
            .count()
    }
}

/// Post-jump anchors of the piecewise-deterministic path. The first anchor
/// is `(0, x₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPath {
    pub anchors: Vec<(f64, f64)>,
    pub alpha: f64,
    pub horizon: f64,
}

impl SkeletonPath {
    /// `X(t)`, post-jump at event times.
    pub fn state_at(&self, t: f64) -> Result<f64> {
        self.eval(t, false)
    }

    /// `X(t−)`.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        self.eval(t, true)
    }

    pub fn eval(&self, t: f64, left_limit: bool) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = if left_limit {
            self.anchors.partition_point(|&(s, _)| s < t).max(1) - 1
        } else {
            self.anchors.partition_point(|&(s, _)| s <= t) - 1
        };
        let (s, x) = self.anchors[idx];
        Ok(x * (-self.alpha * (t - s)).exp())
    }

    pub fn terminal(&self) -> f64 {
        self.state_at(self.horizon).expect("horizon in range")
    }
}

/// Step function `t ↦ Z^{N,i}_t` stored as its sorted jump times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountingPath {
    pub jumps: Vec<f64>,
}

impl CountingPath {
    pub fn value_at(&self, t: f64) -> usize {
        self.jumps.partition_point(|&s| s <= t)
    }
}

/// Counting paths of components `1..=k`; components beyond `N` are zero.
pub fn counting_paths(log: &EventLog, k: usize) -> Vec<CountingPath> {
    let mut paths = vec![CountingPath::default(); k];
    for e in &log.events {
        let i = e.component as usize;
        if (1..=k).contains(&i) {
            paths[i - 1].jumps.push(e.t);
        }
    }
    paths
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub event_cap: usize,
    /// Shrink the dominating rate to `N F(|x′|)` after a rejection.
    pub refresh_on_reject: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            event_cap: 100_000_000,
            refresh_on_reject: true,
        }
    }
}

const ENVELOPE_SLACK: f64 = 1e-12;

/// Thinning kernel. Calls `on_event(event, x_pre, x_post)` for every
/// accepted event and records `X(τ)` for each sorted `observe` time.
/// Returns the terminal state and the number of events.
fn run<R, F>(
    spec: &ModelSpec,
    horizon: f64,
    rng: &mut R,
    opts: EngineOptions,
    observe: &[f64],
    observed: &mut [f64],
    mut on_event: F,
) -> Result<(f64, usize)>
where
    R: Rng,
    F: FnMut(Event, f64, f64),
{
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    let n = spec.n_components;
    let n_f = n as f64;
    let inv_sqrt_n = 1.0 / n_f.sqrt();
    let alpha = spec.alpha;
    let rate = &spec.rate;

    let mut anchor_t = 0.0;
    let mut anchor_x = spec.x0;
    let mut now = 0.0;
    let mut bound = rate.envelope(anchor_x.abs());
    let mut count = 0usize;
    let mut next_obs = 0usize;

    loop {
        let total = n_f * bound;
        let wait: f64 = Exp1.sample(rng);
        let proposal = now + wait / total;
        if proposal > horizon {
            break;
        }
        let x = anchor_x * (-alpha * (proposal - anchor_t)).exp();
        let ratio = rate.eval(x) / bound;
        if ratio > 1.0 + ENVELOPE_SLACK {
            return Err(Error::EnvelopeViolation { x, ratio });
        }
        now = proposal;
        if rng.random::<f64>() * bound <= rate.eval(x) {
            let mark = spec.jump.sample(rng);
            let component = rng.random_range(1..=n as u32);
            while next_obs < observe.len() && observe[next_obs] < proposal {
                observed[next_obs] = anchor_x * (-alpha * (observe[next_obs] - anchor_t)).exp();
                next_obs += 1;
            }
            let post = x + mark * inv_sqrt_n;
            count += 1;
            if count > opts.event_cap {
                return Err(Error::EventCapExceeded {
                    cap: opts.event_cap,
                    time: proposal,
                });
            }
            on_event(
                Event {
                    t: proposal,
                    component,
                    mark,
                },
                x,
                post,
            );
            anchor_t = proposal;
            anchor_x = post;
            bound = rate.envelope(post.abs());
        } else if opts.refresh_on_reject {
            bound = rate.envelope(x.abs());
        }
    }
    while next_obs < observe.len() {
        observed[next_obs] = anchor_x * (-alpha * (observe[next_obs] - anchor_t)).exp();
        next_obs += 1;
    }
    Ok((anchor_x * (-alpha * (horizon - anchor_t)).exp(), count))
}

/// Exact sample of the path and all counting processes on `[0, horizon]`.
pub fn simulate<R: Rng>(spec: &ModelSpec, horizon: f64, rng: &mut R) -> Result<(SkeletonPath, EventLog)> {
    simulate_with(spec, horizon, rng, EngineOptions::default())
}

pub fn simulate_with<R: Rng>(
    spec: &ModelSpec,
    horizon: f64,
    rng: &mut R,
    opts: EngineOptions,
) -> Result<(SkeletonPath, EventLog)> {
    let mut anchors = vec![(0.0, spec.x0)];
    let mut events = Vec::new();
    run(spec, horizon, rng, opts, &[], &mut [], |e, _, post| {
        anchors.push((e.t, post));
        events.push(e);
    })?;
    Ok((
        SkeletonPath {
            anchors,
            alpha: spec.alpha,
            horizon,
        },
        EventLog {
            events,
            horizon,
            n_components: spec.n_components,
        },
    ))
}

/// `X^N_T` without storing the path.
pub fn terminal_state<R: Rng>(spec: &ModelSpec, horizon: f64, rng: &mut R) -> Result<f64> {
    run(spec, horizon, rng, EngineOptions::default(), &[], &mut [], |_, _, _| {}).map(|(x, _)| x)
}

/// Total number of events on `[0, horizon]`, with the event times.
pub fn event_times<R: Rng>(spec: &ModelSpec, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut times = Vec::new();
    run(spec, horizon, rng, EngineOptions::default(), &[], &mut [], |e, _, _| {
        times.push(e.t)
    })?;
    Ok(times)
}

/// `X^N` at each of the sorted `times` along one path.
pub fn observe<R: Rng>(spec: &ModelSpec, times: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("observation times must be sorted".into()));
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut out = vec![0.0; times.len()];
    run(
        spec,
        horizon,
        rng,
        EngineOptions::default(),
        times,
        &mut out,
        |_, _, _| {},
    )?;
    Ok(out)
}

/// `(Z^{N,1}_T, …, Z^{N,k}_T)` without storing the log.
pub fn component_counts<R: Rng>(spec: &ModelSpec, horizon: f64, k: usize, rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; k];
    run(spec, horizon, rng, EngineOptions::default(), &[], &mut [], |e, _, _| {
        if let Some(c) = counts.get_mut(e.component as usize - 1) {
            *c += 1;
        }
    })?;
    Ok(counts)
}
