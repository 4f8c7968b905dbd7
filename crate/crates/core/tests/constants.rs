//! `β`, `ε` and `K_T` against hand values, an independent Gauss–Legendre
//! integration, and 30-digit reference values.

#![allow(clippy::excessive_precision)]

use hawkes_diffusive::model::{beta, default_epsilon, k_t, sharp_regime, validate};
use hawkes_diffusive::{JumpDistribution, ModelSpec, RateFunction};
use proptest::prelude::*;

mod common;
use common::k_t_oracle;

/// `(α, σ², L, T, ε, K)` with `K` evaluated at 30 digits.
const RECORDED: [(f64, f64, f64, f64, f64, f64); 5] = [
    (2.0, 1.0, 1.0, 1.0, 0.5, 2.4935835097998601505),
    (1.0, 1.0, 1.0, 2.0, 1.0, 36.731273138361809414),
    (2.0, 1.0, 1.0, 5.0, 1.5, 2.1211619349887023969),
    (0.5, 2.0, 0.5, 3.0, 0.25, 186.62701723063203715),
    (2.0, 1.0, 1.0, 0.1, 0.5, 0.52603921832852523866),
];

#[test]
fn k_t_matches_recorded_values_and_gauss_legendre() {
    for (a, s2, l, t, e, want) in RECORDED {
        let got = k_t(a, s2, l, t, e).unwrap();
        assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
        let oracle = k_t_oracle(a, s2, l, t, e);
        assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs GL {oracle}");
    }
}

#[test]
fn k_t_zero_only_at_zero() {
    assert_eq!(k_t(2.0, 1.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
    assert!(k_t(2.0, 1.0, 1.0, 1e-3, 0.5).unwrap() > 0.0);
    assert!(k_t(2.0, 1.0, 1.0, 1.0, 0.0).is_err());
    assert!(k_t(2.0, 1.0, 1.0, -1.0, 0.5).is_err());
}

#[test]
fn k_t_is_nondecreasing_when_the_inner_exponent_is_nonnegative() {
    let ts = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
    // σ²L² − 2α + ε = 0 and 0.5.
    for (a, e) in [(1.0, 1.0), (0.5, 0.5)] {
        let ks: Vec<f64> = ts.iter().map(|&t| k_t(a, 1.0, 1.0, t, e).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[1] >= w[0]), "{ks:?}");
    }
    let ks: Vec<f64> = [0.1, 1.0, 5.0]
        .iter()
        .map(|&t| k_t(2.0, 1.0, 1.0, t, 0.5).unwrap())
        .collect();
    assert!(ks[0] > 0.0 && ks[1] >= ks[0] && ks[2] >= ks[1], "{ks:?}");
}

/// With σ²L² − 2α + ε = −2.5 the curve peaks above its limit
/// `3(1/1.5 + 2/1.5³) = 3.7777…` and comes back down.
#[test]
fn k_t_overshoot_with_negative_inner_exponent_is_small() {
    let limit = 3.0 * (1.0 / 1.5 + 2.0 / 1.5f64.powi(3));
    let k10 = k_t(2.0, 1.0, 1.0, 10.0, 0.5).unwrap();
    let k50 = k_t(2.0, 1.0, 1.0, 50.0, 0.5).unwrap();
    assert!(k10 > k50);
    assert!((k10 - limit) / limit < 1e-5);
    assert!(((k50 - limit) / limit).abs() < 1e-9);
}

#[test]
fn k_t_plateaus_in_the_sharp_regime() {
    let (a, s2, l) = (2.0, 1.0, 1.0);
    assert!(sharp_regime(a, s2, l));
    let e = default_epsilon(a, s2, l);
    let ks: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| k_t(a, s2, l, t, e).unwrap())
        .collect();
    let d1 = ks[1] - ks[0];
    let d2 = ks[2] - ks[1];
    let d3 = ks[3] - ks[2];
    assert!(d1.abs() > d2.abs() * 10.0 && d2.abs() >= d3.abs(), "{ks:?}");
    // The limit (1 + 1/ε)∫(1+s²)e^{βs}ds = (5/3)(1/1.5 + 2/1.5³).
    let plateau = 2.0987654320987654321;
    assert!(((ks[3] - plateau) / plateau).abs() < 1e-8, "{}", ks[3]);
}

#[test]
fn hand_values_of_beta_and_epsilon() {
    assert_eq!(beta(1.0, 1.0, 1.0), 0.5);
    assert_eq!(beta(2.0, 1.0, 1.0), -1.5);
    assert_eq!(beta(1.0, 1.0, 0.0), -1.0);
    assert_eq!(default_epsilon(2.0, 1.0, 1.0), 1.5);
    assert_eq!(default_epsilon(0.25, 1.0, 1.0), 1.0);
    assert!(1.0 - 4.0 + default_epsilon(2.0, 1.0, 1.0) < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn beta_nonincreasing_in_alpha(a1 in 0.01f64..10.0, da in 0.0f64..10.0, s2 in 0.01f64..5.0, l in 0.0f64..3.0) {
        prop_assert!(beta(a1 + da, s2, l) <= beta(a1, s2, l));
    }
}

#[test]
fn sharp_regime_flags() {
    let gauss = JumpDistribution::gaussian(1.0).unwrap();
    let s2 = ModelSpec::new(2.0, RateFunction::quadratic(), gauss.clone(), 10, 0.0).unwrap();
    let s1 = ModelSpec::new(1.0, RateFunction::quadratic(), gauss.clone(), 10, 0.0).unwrap();
    assert!(validate(&s2).sharp_regime);
    assert!(!validate(&s1).sharp_regime);
    let flat = ModelSpec::new(1.0, RateFunction::constant(1.0).unwrap(), gauss, 10, 0.0).unwrap();
    assert_eq!(flat.rate.lipschitz_sqrt(), 0.0);
    assert_eq!(flat.rate.envelope(7.0), 1.0);
    assert!(validate(&flat).all_passed());
}

/// `max |(√f)′|` over [−50, 50] by central differences.
fn grid_lipschitz(rate: &RateFunction) -> f64 {
    let h = 1e-5;
    (0..=1_000_000)
        .map(|i| -50.0 + 1e-4 * i as f64)
        .map(|x| ((rate.eval(x + h).sqrt() - rate.eval(x - h).sqrt()) / (2.0 * h)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn stored_lipschitz_constants_dominate_the_grid_maximum() {
    for rate in [
        RateFunction::quadratic(),
        RateFunction::root_quadratic(),
        RateFunction::arctan_sq(),
        RateFunction::constant(2.0).unwrap(),
    ] {
        let grid = grid_lipschitz(&rate);
        assert!(
            grid <= rate.lipschitz_sqrt() + 1e-6,
            "{}: grid {grid} > {}",
            rate.name(),
            rate.lipschitz_sqrt()
        );
    }
    // The root-quadratic constant is attained at x² = 2.
    let rq = RateFunction::root_quadratic();
    assert!((grid_lipschitz(&rq) - rq.lipschitz_sqrt()).abs() < 1e-6);
    assert!((grid_lipschitz(&RateFunction::quadratic()) - 1.0).abs() < 1e-3);
}
