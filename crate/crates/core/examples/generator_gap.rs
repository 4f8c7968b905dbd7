//! Measured generator gap |Aᴺ sin − Ā sin| against its third-derivative
//! bound, for skewed two-point marks.

use hawkes_diffusive::generators::{gap_check, TestFunction};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::new(
        1.0,
        RateFunction::quadratic(),
        JumpDistribution::two_point(2.0, -1.0, 1.0 / 3.0)?,
        1,
        0.0,
    )?;
    let xs: Vec<f64> = (-3..=3).map(f64::from).collect();
    let report = gap_check(&TestFunction::sin(), &spec, &xs, &[10, 100, 1000, 10_000])?;
    println!("{:>6} {:>5} {:>14} {:>14}", "N", "x", "gap", "bound");
    for row in &report.table {
        println!("{:>6} {:>5} {:>14.6e} {:>14.6e}", row.n, row.x, row.gap, row.bound);
    }
    println!(
        "worst gap/bound {:.4}, slope of max gap {:.4}",
        report.worst_ratio,
        report.slope.unwrap_or(f64::NAN)
    );
    report.ensure()?;
    Ok(())
}
