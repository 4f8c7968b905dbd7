//! One Euler–Maruyama path of dX̄ = −αX̄ dt + σ√f(X̄) dW and three Cox
//! processes with intensity f(X̄) driven by it.

use hawkes_diffusive::limit::{cox_counts, simulate_em, LimitDiffusion};
use hawkes_diffusive::rng::{domain, Streams};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::new(1.0, RateFunction::quadratic(), JumpDistribution::gaussian(1.0)?, 1, 0.0)?;
    let diff = LimitDiffusion::from_spec(&spec);
    let path = simulate_em(&diff, 10.0, 1e-3, &mut Streams::new(2, domain::BROWNIAN).stream(0))?;
    let cox = cox_counts(&path, &diff.rate, 3, &mut Streams::new(2, domain::COX).stream(0));
    let lambda = path.integrated_rate(&diff.rate);
    println!(
        "{} steps, X̄_10 = {:.4}, ∫f(X̄) = {lambda:.3}",
        path.steps(),
        path.terminal()
    );
    for c in 1..=3 {
        println!("component {c}: {} events", cox.count(c));
    }
    Ok(())
}
