use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use relzeta::quadrature::{
    integrate_adaptive, integrate_graded, integrate_q_region, integrate_singular_semiinf, mc_integrate, JuttnerSampler,
    JUTTNER_MASS,
};
use relzeta::{Momentum, QuadSpec, RegionSpec};

/// `K₂(1)` and `K₂(2)`.
const K2_1: f64 = 1.624_838_898_635_177_4;
const K2_2: f64 = 0.253_759_754_566_055_9;

fn tight() -> QuadSpec {
    QuadSpec::inner().with_rel_tol(1e-12)
}

#[test]
fn finite_interval_examples() {
    let r = integrate_adaptive(|_| 1.0, 0.0, 1.0, &tight()).unwrap();
    assert!((r.value - 1.0).abs() <= 4.0 * f64::EPSILON);
    let r = integrate_graded(|y| y.powf(-0.5), 0.0, 1.0, -0.5, &tight()).unwrap();
    assert!((r.value - 2.0).abs() < 1e-8);
    let r = integrate_adaptive(f64::sin, 0.0, PI, &tight()).unwrap();
    assert!((r.value - 2.0).abs() < 1e-10);
    assert!(r.err_estimate < 1e-8);
    assert!(integrate_adaptive(|_| 1.0, 1.0, 0.0, &tight()).is_err());
}

#[test]
fn semi_infinite_examples() {
    let spec = QuadSpec { tail_log: 60.0, ..tight() };
    let r = integrate_singular_semiinf(|y| y.sqrt() * (-y).exp(), 0.5, 1.0, &spec).unwrap();
    assert_relative_eq!(r.value, PI.sqrt() / 2.0, max_relative = 1e-10);
    let r = integrate_singular_semiinf(|y| (-2.0 * y).exp(), 0.0, 2.0, &spec).unwrap();
    assert_relative_eq!(r.value, 0.5, max_relative = 1e-10);
    let r = integrate_singular_semiinf(|y| y * (-y * y).exp(), 1.0, 1.0, &spec).unwrap();
    assert_relative_eq!(r.value, 0.5, max_relative = 1e-10);
}

#[test]
fn non_finite_integrand_is_an_error() {
    assert!(integrate_adaptive(|x| 1.0 / (x - 0.5), 0.0, 1.0, &tight()).is_err());
}

/// `∫₀^∞ r² e^{−√(1+r²)} dr` by a substitution `r = sinh t` and the trapezoid rule.
fn juttner_radial_oracle() -> f64 {
    let h = 1e-3;
    (1..40_000)
        .map(|k| {
            let t = k as f64 * h;
            let r = t.sinh();
            r * r * (-t.cosh()).exp() * t.cosh()
        })
        .sum::<f64>()
        * h
}

#[test]
fn juttner_normalization_over_momentum_space() {
    let oracle = juttner_radial_oracle();
    assert_relative_eq!(oracle, K2_1, max_relative = 1e-12);
    let spec = QuadSpec::outer().with_rel_tol(1e-10);
    for p in [Momentum::new(0.0, 0.0, 0.0), Momentum::new(0.0, 0.0, 2.0), Momentum::new(3.0, -1.0, 0.5)] {
        let r = integrate_q_region(|r, _| (-(1.0 + r * r).sqrt()).exp() / (4.0 * PI), &p, RegionSpec::full(), &spec).unwrap();
        assert_relative_eq!(r.value, oracle, max_relative = 1e-8);
    }
    assert_relative_eq!(JUTTNER_MASS, 4.0 * PI * oracle, max_relative = 1e-12);
}

#[test]
fn small_region_volume() {
    let spec = QuadSpec::outer().with_rel_tol(1e-10);
    let r = integrate_q_region(|_, _| 1.0, &Momentum::new(0.0, 0.0, 2.0), RegionSpec::small(1.0), &spec).unwrap();
    assert_relative_eq!(r.value, 4.0 * PI / 3.0, max_relative = 1e-10);
    assert_relative_eq!(r.value, 4.18879, max_relative = 1e-6);
}

#[test]
fn regions_partition_momentum_space() {
    let spec = QuadSpec::outer().with_rel_tol(1e-10);
    let f = |r: f64, mu: f64| (-(1.0 + r * r).sqrt()).exp() * (1.0 + mu * mu) / (1.0 + r);
    for (pz, m) in [(5.0, 2.0), (40.0, 3.0), (0.5, 1.5)] {
        let p = Momentum::new(0.0, 0.0, pz);
        let full = integrate_q_region(f, &p, RegionSpec::full(), &spec).unwrap().value;
        let small = integrate_q_region(f, &p, RegionSpec::small(m), &spec).unwrap().value;
        let large = integrate_q_region(f, &p, RegionSpec::large(m), &spec).unwrap().value;
        assert_relative_eq!(small + large, full, max_relative = 1e-9);
    }
}

#[test]
fn mc_self_normalization() {
    let r = mc_integrate(|q: &[f64; 3]| (-(1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()).exp() / JUTTNER_MASS, &JuttnerSampler, 1000, 1);
    assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
    assert!(r.stderr < 1e-12);
}

#[test]
fn mc_within_four_sigma() {
    // ∫ e^{−2q⁰} dq = 4π K₂(2)/2
    let want = 2.0 * PI * K2_2;
    for seed in [1, 2, 3] {
        let r = mc_integrate(|q: &[f64; 3]| (-2.0 * (1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()).exp(), &JuttnerSampler, 20_000, seed);
        assert!((r.value - want).abs() <= 4.0 * r.stderr, "seed {seed}: {} ± {}", r.value, r.stderr);
        assert_eq!(r.n, 20_000);
    }
}

#[test]
fn mc_is_deterministic() {
    let f = |q: &[f64; 3]| q[2].cos() * (-q[0].abs()).exp();
    let a = mc_integrate(f, &JuttnerSampler, 5000, 42);
    let b = mc_integrate(f, &JuttnerSampler, 5000, 42);
    let c = mc_integrate(f, &JuttnerSampler, 5000, 43);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_ne!(a.value, c.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomials_integrate_exactly(c in proptest::collection::vec(-5.0f64..5.0, 1..12), a in -3.0f64..0.0, w in 0.1f64..4.0) {
        let b = a + w;
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let anti = |x: f64| c.iter().enumerate().rev().fold(0.0, |acc, (i, &k)| acc * x + k / (i + 1) as f64) * x;
        let r = integrate_adaptive(poly, a, b, &tight()).unwrap();
        let want = anti(b) - anti(a);
        let scale: f64 = c.iter().map(|k| k.abs()).sum::<f64>() * w * (1.0 + a.abs().max(b.abs())).powi(c.len() as i32);
        prop_assert!((r.value - want).abs() <= 1e-13 * scale);
    }

    #[test]
    fn graded_power_singularities(alpha in -0.9f64..1.0) {
        let r = integrate_graded(|y| y.powf(alpha), 0.0, 1.0, alpha, &tight()).unwrap();
        prop_assert!((r.value * (1.0 + alpha) - 1.0).abs() < 1e-9);
    }
}
