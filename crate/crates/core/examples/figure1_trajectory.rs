//! Trajectories of X^N for α = 1, μ = N(0,1), f = 1 + x², x₀ = 0 on [0, 10],
//! at N = 100 and N = 500. Writes `path_N.csv` and `events_N.csv` into the
//! directory given as the first argument (default `figure1`).

use std::fs::File;
use std::path::PathBuf;

use hawkes_diffusive::hawkes;
use hawkes_diffusive::io::{write_events, write_skeleton};
use hawkes_diffusive::rng::{domain, Streams};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figure1".into()));
    std::fs::create_dir_all(&dir)?;
    let base = ModelSpec::new(
        1.0,
        RateFunction::quadratic(),
        JumpDistribution::gaussian(1.0)?,
        100,
        0.0,
    )?;
    for n in [100, 500] {
        let spec = base.with_n(n)?;
        let (skel, log) = hawkes::simulate(&spec, 10.0, &mut Streams::new(1, domain::HAWKES).stream(n as u64))?;
        write_skeleton(File::create(dir.join(format!("path_{n}.csv")))?, &skel)?;
        write_events(File::create(dir.join(format!("events_{n}.csv")))?, &log)?;
        let peak = skel.anchors.iter().map(|a| a.1.abs()).fold(0.0, f64::max);
        println!(
            "N = {n}: {} events, max |X| = {peak:.3}, X_10 = {:.3}",
            log.len(),
            skel.terminal()
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}
