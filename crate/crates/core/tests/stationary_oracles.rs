//! Invariant density against closed forms, and empirical laws against it.

use hawkes_diffusive::limit::LimitDiffusion;
use hawkes_diffusive::rng::{domain, Streams};
use hawkes_diffusive::stationary::{long_run_law, long_run_limit, wasserstein1, InvariantDensity, Reference};
use hawkes_diffusive::stats::{correlation, replicate};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// `f = 1 + x²`: `p(x) = (1+x²)^{−s} Γ(s) / (√π Γ(s − ½))` with `s = 1 + α/σ²`.
fn quadratic_pdf(alpha: f64, sigma2: f64, x: f64) -> f64 {
    let s = 1.0 + alpha / sigma2;
    (-s * (1.0 + x * x).ln() + ln_gamma(s) - ln_gamma(s - 0.5) - 0.5 * std::f64::consts::PI.ln()).exp()
}

#[test]
fn quadratic_rate_density_is_a_scaled_student_law() {
    for (alpha, sigma2) in [(2.0, 1.0), (1.0, 1.0), (0.7, 2.0), (5.0, 0.5)] {
        let d = InvariantDensity::new(alpha, sigma2, RateFunction::quadratic()).unwrap();
        for x in [-6.0, -1.0, 0.0, 0.3, 2.0, 15.0] {
            let exact = quadratic_pdf(alpha, sigma2, x);
            assert!(
                (d.pdf(x) - exact).abs() < 1e-8 * quadratic_pdf(alpha, sigma2, 0.0),
                "α={alpha} σ²={sigma2} x={x}"
            );
        }
    }
    let d = InvariantDensity::new(2.0, 1.0, RateFunction::quadratic()).unwrap();
    assert!((d.pdf(0.0) - 8.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-10);
}

#[test]
fn constant_rate_density_is_gaussian() {
    let d = InvariantDensity::new(1.0, 1.0, RateFunction::constant(1.0).unwrap()).unwrap();
    let law = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    for x in [-2.0, -0.5, 0.0, 1.0, 2.5] {
        assert!((d.pdf(x) - law.pdf(x)).abs() < 1e-9);
        assert!((d.cdf(x) - law.cdf(x)).abs() < 1e-6, "cdf at {x}");
    }
    for p in [0.01, 0.25, 0.5, 0.9, 0.999] {
        assert!((d.quantile(p) - law.inverse_cdf(p)).abs() < 1e-4, "quantile {p}");
    }
}

/// `Āx = −αx`, so every invariant law is centred; only even rates give an
/// even density.
#[test]
fn normalisation_and_centring() {
    for rate in [
        RateFunction::quadratic(),
        RateFunction::root_quadratic(),
        RateFunction::arctan_sq(),
    ] {
        let d = InvariantDensity::new(2.0, 1.0, rate.clone()).unwrap();
        assert!((d.expect(|_| 1.0) - 1.0).abs() < 1e-8, "{}", rate.name());
        assert!(d.expect(|x| x).abs() < 1e-8, "{}", rate.name());
    }
    for rate in [RateFunction::quadratic(), RateFunction::root_quadratic()] {
        let d = InvariantDensity::new(2.0, 1.0, rate).unwrap();
        for x in [0.5, 1.7, 4.0] {
            assert!((d.pdf(x) - d.pdf(-x)).abs() <= 1e-12 * d.pdf(0.0));
        }
    }
    let d = InvariantDensity::new(2.0, 1.0, RateFunction::arctan_sq()).unwrap();
    assert!(d.pdf(-1.0) > 1.5 * d.pdf(1.0));
}

#[test]
fn gaussian_draws_are_close_to_the_constant_rate_density() {
    let d = InvariantDensity::new(1.0, 1.0, RateFunction::constant(1.0).unwrap()).unwrap();
    let s = Streams::new(71, domain::VALIDATE);
    let xs = replicate(100_000, |r| {
        let z: f64 = StandardNormal.sample(&mut s.stream(r));
        z * 0.5f64.sqrt()
    });
    let w = wasserstein1(&xs, Reference::Density(&d)).unwrap();
    assert!(w < 0.01, "W1 = {w}");
    let shifted: Vec<f64> = xs.iter().map(|x| x + 0.3).collect();
    assert!((wasserstein1(&shifted, Reference::Samples(&xs)).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(wasserstein1(&xs, Reference::Samples(&xs)).unwrap(), 0.0);
}

#[test]
fn jump_system_with_constant_rate_settles_to_the_ou_law() {
    let spec = ModelSpec::new(
        1.0,
        RateFunction::constant(1.0).unwrap(),
        JumpDistribution::gaussian(1.0).unwrap(),
        100,
        0.0,
    )
    .unwrap();
    let d = InvariantDensity::from_spec(&spec).unwrap();
    let xs = long_run_law(&spec, 10.0, 10_000, &Streams::new(72, domain::HAWKES)).unwrap();
    let w = wasserstein1(&xs, Reference::Density(&d)).unwrap();
    assert!(w < 0.02, "W1 = {w}");
    let at_zero = long_run_law(&spec.with_x0(1.5).unwrap(), 0.0, 10, &Streams::new(72, domain::HAWKES)).unwrap();
    assert!(at_zero.iter().all(|&x| x == 1.5));
}

/// From `x₀ = 5` the distance to the invariant law decays geometrically.
/// The window stops at `t = 2`: by `t = 4` the signal `≈ 5e^{−2t}` is below
/// the sampling floor of the empirical W₁.
#[test]
fn ergodic_decay_from_a_far_start() {
    let spec = ModelSpec::new(
        2.0,
        RateFunction::quadratic(),
        JumpDistribution::gaussian(1.0).unwrap(),
        1,
        5.0,
    )
    .unwrap();
    let d = InvariantDensity::from_spec(&spec).unwrap();
    let diff = LimitDiffusion::from_spec(&spec);
    let ts = [0.25, 0.5, 1.0, 2.0];
    let s = Streams::new(73, domain::BROWNIAN);
    let ws: Vec<f64> = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let xs = long_run_limit(&diff, t, 2e-3, 40_000, &s.child(j as u64)).unwrap();
            wasserstein1(&xs, Reference::Density(&d)).unwrap()
        })
        .collect();
    assert!(ws.windows(2).all(|w| w[1] < w[0]), "{ws:?}");
    let logs: Vec<f64> = ws.iter().map(|w| w.ln()).collect();
    let rho = correlation(&ts, &logs);
    assert!(rho < -0.95, "corr = {rho}, {ws:?}");
}

#[test]
fn limit_and_jump_system_agree_in_the_long_run() {
    let spec = ModelSpec::new(
        2.0,
        RateFunction::quadratic(),
        JumpDistribution::gaussian(1.0).unwrap(),
        200,
        0.0,
    )
    .unwrap();
    let diff = LimitDiffusion::from_spec(&spec);
    let bar = long_run_limit(&diff, 30.0, 1e-2, 10_000, &Streams::new(74, domain::BROWNIAN)).unwrap();
    let jumps = long_run_law(&spec, 30.0, 10_000, &Streams::new(74, domain::HAWKES)).unwrap();
    let w = wasserstein1(&bar, Reference::Samples(&jumps)).unwrap();
    assert!(w < 0.05, "W1 = {w}");
}
