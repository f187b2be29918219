use approx::assert_relative_eq;
use proptest::prelude::*;
use relzeta::asymptotics::{check_bounds, fit_exponent, linear_fit, log_grid, scan, AsymptoticsError};
use relzeta::multiplier::{breakdown, Estimate};
use relzeta::{KernelConfig, Momentum, MultiplierBreakdown, QuadSpec};

fn hard() -> KernelConfig {
    KernelConfig::hard(1.0, 0.5).unwrap()
}

fn est(value: f64) -> Estimate {
    Estimate { value, err: 0.0 }
}

/// Breakdown whose pieces follow prescribed power laws.
fn synthetic(p0: f64, zeta_slope: f64) -> MultiplierBreakdown {
    let m = 45.0;
    MultiplierBreakdown {
        p0,
        cfg: hard(),
        m,
        calibration_constant: 1.0,
        tilde_zeta: est(p0.powf(0.75)),
        zeta: est(p0.powf(zeta_slope)),
        zeta_k: est(p0.powf(0.6)),
        zeta0_full: est(p0.powf(0.5)),
        zeta_l_full: est(-p0.powf(0.3)),
        zeta0m: est(p0.powf(0.5)),
        zeta_lm: est(-p0.powf(0.3)),
        tilde_zeta0m: est(p0.powf(0.4)),
        tilde_zeta_lm: est(p0.powf(0.4)),
        tilde_zeta1: est((-3.0 * p0.powf(1.0 / m)).exp()),
        converged: true,
        warnings: vec![],
    }
}

#[test]
fn exact_and_constant_power_laws() {
    let grid = log_grid(10.0, 1000.0, 12).unwrap();
    let f = fit_exponent(&grid.iter().map(|&p| (p, 7.0 * p.powf(0.75))).collect::<Vec<_>>()).unwrap();
    assert!((f.slope - 0.75).abs() < 1e-12 && f.std_err < 1e-12);
    let f = fit_exponent(&grid.iter().map(|&p| (p, 3.0)).collect::<Vec<_>>()).unwrap();
    assert!(f.slope.abs() < 1e-12);
    // negative values fit on |value|
    let f = fit_exponent(&grid.iter().map(|&p| (p, -2.0 * p.powf(-0.15))).collect::<Vec<_>>()).unwrap();
    assert_relative_eq!(f.slope, -0.15, max_relative = 1e-10);
}

#[test]
fn fit_needs_three_points() {
    assert!(matches!(linear_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(AsymptoticsError::InsufficientData(_))));
    assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(fit_exponent(&[(10.0, 0.0), (20.0, 0.0), (30.0, 1.0)]).is_err());
}

#[test]
fn log_grid_examples() {
    let g = log_grid(10.0, 1000.0, 3).unwrap();
    assert_eq!(g[0], 10.0);
    assert_relative_eq!(g[1], 100.0, max_relative = 1e-14);
    assert_eq!(g[2], 1000.0);
    assert!(log_grid(10.0, 1000.0, 1).is_err());
    assert!(log_grid(0.0, 10.0, 4).is_err());
    assert!(log_grid(10.0, 10.0, 4).is_err());
}

#[test]
fn scan_validates_grid() {
    let spec = QuadSpec::outer().with_rel_tol(1e-3);
    let m = 45.0;
    assert!(matches!(scan(&[0.5, 2.0], [0.0, 0.0, 1.0], &hard(), m, &spec), Err(AsymptoticsError::InvalidGrid(_))));
    assert!(scan(&[3.0, 2.0], [0.0, 0.0, 1.0], &hard(), m, &spec).is_err());
    assert!(scan(&[2.0], [0.0; 3], &hard(), m, &spec).is_err());
}

#[test]
fn scan_point_matches_breakdown_and_is_isotropic() {
    let spec = QuadSpec::outer().with_rel_tol(1e-5);
    let cfg = hard();
    let p0 = 3.0;
    let single = scan(&[p0], [0.0, 0.0, 1.0], &cfg, 45.0, &spec).unwrap().remove(0).unwrap();
    let direct = breakdown(&Momentum::with_energy(p0, [0.0, 0.0, 1.0]), &cfg, 45.0, &spec).unwrap();
    assert_eq!(single, direct);
    let tilted = scan(&[p0], [1.0, 1.0, 1.0], &cfg, 45.0, &spec).unwrap().remove(0).unwrap();
    assert_relative_eq!(tilted.tilde_zeta.value, single.tilde_zeta.value, max_relative = 1e-6);
    assert_relative_eq!(tilted.zeta.value, single.zeta.value, max_relative = 1e-6);
}

#[test]
fn bounds_on_synthetic_scan() {
    let grid = log_grid(10.0, 1000.0, 10).unwrap();
    let good: Vec<_> = grid.iter().map(|&p| synthetic(p, 0.75)).collect();
    let r = check_bounds(&good, &hard()).unwrap();
    assert_eq!(r.target_zeta_slope, 0.75);
    assert!(r.all_pass(), "{:?}", r.checks);
    assert!(r.tilde_zeta1_decreasing && r.zeta_positive);

    let bad: Vec<_> = grid.iter().map(|&p| synthetic(p, 0.9)).collect();
    let r = check_bounds(&bad, &hard()).unwrap();
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["zeta slope"]);

    let soft = KernelConfig::soft(1.5, 1.2).unwrap();
    assert_relative_eq!(check_bounds(&good, &soft).unwrap().target_zeta_slope, -0.15, max_relative = 1e-12);
}

#[test]
fn bounds_need_enough_data() {
    let few: Vec<_> = log_grid(10.0, 1000.0, 5).unwrap().iter().map(|&p| synthetic(p, 0.75)).collect();
    assert!(matches!(check_bounds(&few, &hard()), Err(AsymptoticsError::InsufficientData(_))));
    let narrow: Vec<_> = log_grid(10.0, 20.0, 10).unwrap().iter().map(|&p| synthetic(p, 0.75)).collect();
    assert!(check_bounds(&narrow, &hard()).is_err());
}

proptest! {
    #[test]
    fn perturbed_power_law(noise in proptest::collection::vec(-0.05f64..0.05, 12), c in 0.1f64..100.0) {
        let grid = log_grid(10.0, 1000.0, 12).unwrap();
        let s: Vec<_> = grid.iter().zip(&noise).map(|(&p, e)| (p, c * p.powf(0.75) * (1.0 + e))).collect();
        let f = fit_exponent(&s).unwrap();
        prop_assert!((f.slope - 0.75).abs() <= 0.1);
    }
}
