use thiserror::Error;

/// Errors raised by model construction, simulation and the experiment layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("envelope violation at x = {x}: f(x)/F(r) = {ratio} exceeds 1")]
    EnvelopeViolation { x: f64, ratio: f64 },

    #[error("event cap of {cap} exceeded before t = {time}; intensity is running away")]
    EventCapExceeded { cap: usize, time: f64 },

    #[error("non-finite state {value} at step {step} (t = {time}); step too large")]
    NonFiniteState { step: usize, time: f64, value: f64 },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("unsupported jump law for quadrature: {0}")]
    UnsupportedJumpLaw(String),

    #[error("quadrature guard failed: 64 nodes give {value}, 128 nodes give {doubled}")]
    QuadratureGuard { value: f64, doubled: f64 },

    #[error("invariant density not normalisable: {0}")]
    TailDivergence(String),

    #[error("rate experiment unresolvable: only {resolvable} rows have error > 3 sem (need 3)")]
    Unresolvable { resolvable: usize },

    #[error("generator gap bound violated at x = {x}, N = {n}: gap {gap} > bound {bound}")]
    GapViolation { x: f64, n: usize, gap: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
