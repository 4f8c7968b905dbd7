//! Simulation and Monte Carlo verification for mean-field Hawkes systems
//! with `1/√N`-scaled random jumps and their CIR-type diffusion limit.
//!
//! The `N`-component system shares one potential
//!
//! ```text
//! dXᴺ_t = −α Xᴺ_t dt + N^{-1/2} Σ_j ∫ u 1{z ≤ f(Xᴺ_{t−})} π_j(dt, dz, du)
//! ```
//!
//! and, as `N → ∞`, converges to `dX̄ = −αX̄ dt + σ√f(X̄) dB`. The crate
//! provides:
//!
//! - [`model`]: rate functions, mark laws, and the constants `β`, `K_T`;
//! - [`hawkes`]: exact thinning simulation of `Xᴺ` and the counting processes;
//! - [`limit`]: Euler–Maruyama for `X̄` and the Cox processes it drives;
//! - [`generators`]: pointwise generators and the third-order gap bound;
//! - [`stationary`]: the invariant density and Wasserstein-1 distances;
//! - [`mc`]: the convergence experiments;
//! - [`config`] and [`cli`]: the run configuration and the experiment runner.

pub mod cli;
pub mod config;
pub mod error;
pub mod generators;
pub mod hawkes;
pub mod io;
pub mod limit;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod stationary;
pub mod stats;

pub use error::{Error, Result};
pub use model::{JumpDistribution, ModelSpec, RateFunction};
pub use rng::Streams;
pub use stats::McEstimate;
