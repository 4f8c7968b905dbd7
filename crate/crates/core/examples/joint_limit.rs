//! W₁ to the invariant law along (t, N) = (2, 25), (5, 100), (10, 400) in
//! the sharp regime.

use hawkes_diffusive::mc::joint_limit_experiment;
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let jump = JumpDistribution::two_point(std::f64::consts::SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 1.0 / 3.0)?;
    let spec = ModelSpec::new(2.0, RateFunction::quadratic(), jump, 25, 0.0)?;
    println!("sharp regime: {}", spec.sharp_regime());
    let report = joint_limit_experiment(&spec, &[(2.0, 25), (5.0, 100), (10.0, 400)], reps, 5)?;
    for row in &report.rows {
        println!(
            "t = {:>4}, N = {:>3}: W1 = {:.5} ± {:.5}",
            row.t, row.n, row.w1.mean, row.w1.sem
        );
    }
    println!("decreasing: {:?}", report.decreasing());
    Ok(())
}
