use approx::assert_relative_eq;
use proptest::prelude::*;
use relzeta::multiplier::{tilde_zeta, Rep};
use relzeta::oracle::{
    calibrate_constant, direct_gain_loss, direct_tilde_zeta, direct_tilde_zeta_mc, divergence_demo, phi_averages,
    reduced_gain_loss, DivergenceForm, OracleError,
};
use relzeta::specfun::log_i0;
use relzeta::{KernelConfig, Momentum, QuadSpec};

fn demo() -> KernelConfig {
    KernelConfig::demo(0.0, 1.0, 1.0).unwrap()
}

fn spec() -> QuadSpec {
    QuadSpec::outer().with_rel_tol(1e-6)
}

fn p2() -> Momentum {
    Momentum::new(0.0, 0.0, 2.0)
}

#[test]
fn zero_coupling_gives_zero() {
    let cfg = KernelConfig::hard(1.0, 0.5).unwrap().with_delta(0.1).unwrap().with_c_phi(0.0).unwrap();
    assert_eq!(direct_tilde_zeta(&p2(), &cfg, &spec()).unwrap().value, 0.0);
}

#[test]
fn calibration_constant_is_half_and_scale_free() {
    let cfgs = [demo().with_delta(0.1).unwrap()];
    let a = calibrate_constant(&cfgs, &[p2()], &spec()).unwrap();
    assert!(a.constant > 0.0);
    assert_relative_eq!(a.constant, 0.5, max_relative = 1e-5);
    let scaled = [cfgs[0].with_c_phi(10.0).unwrap()];
    let b = calibrate_constant(&scaled, &[p2()], &spec()).unwrap();
    assert_relative_eq!(a.constant, b.constant, max_relative = 1e-10);
}

#[test]
fn calibration_preconditions() {
    assert!(matches!(calibrate_constant(&[], &[p2()], &spec()), Err(OracleError::Precondition(_))));
    assert!(matches!(calibrate_constant(&[demo()], &[p2()], &spec()), Err(OracleError::Precondition(_))));
    let steep = KernelConfig::hard(1.0, 1.5).unwrap();
    assert!(matches!(direct_tilde_zeta(&p2(), &steep, &spec()), Err(OracleError::Precondition(_))));
    assert!(direct_tilde_zeta_mc(&p2(), &steep, 10, 1).is_err());
}

#[test]
fn gain_and_loss() {
    let cfg = demo();
    let (dg, dl) = direct_gain_loss(&p2(), &cfg, &spec()).unwrap();
    let (rg, rl) = reduced_gain_loss(&p2(), &cfg, &spec()).unwrap();
    assert!(dg.value > 0.0 && dl.value > 0.0 && rg.value > 0.0 && rl.value > 0.0);
    // ζ̃ is loss minus gain in both forms
    let direct = direct_tilde_zeta(&p2(), &cfg, &spec()).unwrap().value;
    assert_relative_eq!(dl.value - dg.value, direct, max_relative = 1e-4);
    let rep2 = tilde_zeta(&p2(), &cfg, &spec(), Rep::Rep2).unwrap().value;
    assert_relative_eq!(rl.value - rg.value, rep2, max_relative = 1e-4);
    assert_relative_eq!(dg.value / rg.value, 0.5, max_relative = 1e-4);
    assert_relative_eq!(dl.value / rl.value, 0.5, max_relative = 1e-4);
    assert!(direct_gain_loss(&p2(), &KernelConfig::hard(1.0, 0.5).unwrap(), &spec()).is_err());
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let cfg = demo();
    let q = direct_tilde_zeta(&p2(), &cfg, &spec()).unwrap().value;
    for seed in [7, 8] {
        let mc = direct_tilde_zeta_mc(&p2(), &cfg, 20_000, seed).unwrap();
        assert!((mc.value - q).abs() <= 4.0 * mc.stderr, "seed {seed}: {} ± {} vs {q}", mc.value, mc.stderr);
    }
    let a = direct_tilde_zeta_mc(&p2(), &cfg, 2000, 3).unwrap();
    let b = direct_tilde_zeta_mc(&p2(), &cfg, 2000, 3).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn divergence_of_unweighted_loss() {
    let spec = QuadSpec::outer().with_rel_tol(1e-5);
    let cuts = [10.0, 100.0, 1000.0, 10000.0];
    let un = divergence_demo(&p2(), &demo(), &cuts, DivergenceForm::Unweighted, &spec).unwrap();
    assert!(un.windows(2).all(|w| w[1].value > w[0].value));
    assert!(un[3].value / un[0].value >= 10.0);
    let lw = divergence_demo(&p2(), &demo(), &cuts, DivergenceForm::LossWeighted, &spec).unwrap();
    assert!((lw[3].value - lw[2].value).abs() <= 1e-8 * lw[3].value.abs());
    assert!(divergence_demo(&p2(), &KernelConfig::hard(1.0, 0.5).unwrap(), &cuts, DivergenceForm::Unweighted, &spec).is_err());
    assert!(divergence_demo(&p2(), &demo(), &[10.0, 5.0], DivergenceForm::Unweighted, &spec).is_err());
    assert!(divergence_demo(&p2(), &demo(), &[], DivergenceForm::Unweighted, &spec).is_err());
}

proptest! {
    #[test]
    fn phi_averages_match_bessel(alpha in -20.0f64..0.0, beta in 0.0f64..20.0) {
        let (d, g) = phi_averages(alpha, beta);
        let want = (alpha + log_i0(beta).unwrap()).exp();
        prop_assert!((g - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert!((d - (1.0 - want)).abs() <= 1e-12 * want.max(1.0));
    }
}
