//! β, the default ε and K_T for a few parameter sets.

use hawkes_diffusive::model::{beta, default_epsilon, k_t, sharp_regime};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (alpha, sigma2, l) in [(2.0, 1.0, 1.0), (1.0, 1.0, 1.0), (1.0, 1.0, 0.3102016197007)] {
        let eps = default_epsilon(alpha, sigma2, l);
        print!(
            "α={alpha} σ²={sigma2} L={l}: β={:+.4} ε={eps} sharp={}",
            beta(alpha, sigma2, l),
            sharp_regime(alpha, sigma2, l)
        );
        for t in [1.0, 10.0, 100.0] {
            print!("  K_{t}={:.6e}", k_t(alpha, sigma2, l, t, eps)?);
        }
        println!();
    }
    Ok(())
}
