use approx::assert_relative_eq;
use proptest::prelude::*;
use relzeta::specfun::{j2_closed, k2tilde_closed, kbar_gamma_num, log_i0, LOG_I0_SWITCH};

/// `ln I₀(x)` from `(1/π)∫₀^π e^{x(cos θ − 1)} dθ` by a 512-point midpoint rule,
/// which is spectrally accurate for this periodic integrand.
fn log_i0_oracle(x: f64) -> f64 {
    let n = 512;
    let h = std::f64::consts::PI / n as f64;
    let s: f64 = (0..n).map(|k| (x * (((k as f64 + 0.5) * h).cos() - 1.0)).exp()).sum();
    x + (s / n as f64).ln()
}

#[test]
fn log_i0_examples() {
    assert_eq!(log_i0(0.0).unwrap(), 0.0);
    assert_relative_eq!(log_i0(1.0).unwrap(), 0.235_914_358_507_178_5, max_relative = 1e-14);
    assert_relative_eq!(log_i0(1.0).unwrap(), 0.235_914_354_9, max_relative = 1e-7);
    let d = log_i0(100.0).unwrap() - (100.0 - 0.5 * (200.0 * std::f64::consts::PI).ln());
    assert!((0.0..=0.002).contains(&d), "{d}");
    assert!(log_i0(-1.0).is_err());
    assert!(log_i0(f64::NAN).is_err());
    let big = log_i0(1e6).unwrap();
    assert!(big.is_finite() && (big - 1e6).abs() < 10.0);
}

#[test]
fn log_i0_continuous_at_switch() {
    // the slope of ln I₀ is below 1, so a jump would show above 1e-12 + dx
    let dx = LOG_I0_SWITCH * 1e-12;
    let a = log_i0(LOG_I0_SWITCH - dx).unwrap();
    let b = log_i0(LOG_I0_SWITCH).unwrap();
    assert!((b - a).abs() < dx + 1e-12);
}

#[test]
fn j2_examples() {
    assert_relative_eq!(j2_closed(1.0, 0.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
    let w = 3f64.sqrt();
    assert_relative_eq!(j2_closed(2.0, 1.0).unwrap(), (-w).exp() / w, max_relative = 1e-15);
    assert_relative_eq!(j2_closed(2.0, 1.0).unwrap(), 0.102_146_3, max_relative = 1e-5);
    assert!(j2_closed(1.0, 1.0).is_err());
    assert!(j2_closed(0.0, 0.0).is_err());
}

#[test]
fn k2tilde_examples() {
    assert_relative_eq!(k2tilde_closed(2.0, 0.0).unwrap(), 1.25 * (-2.0f64).exp(), max_relative = 1e-14);
    assert_relative_eq!(k2tilde_closed(2.0, 0.0).unwrap(), 0.169_168_7, max_relative = 1e-5);
    for l in [0.5f64, 1.0, 5.0, 10.0] {
        let want = (-l).exp() * (1.0 / l + 2.0 / (l * l) + 2.0 / (l * l * l));
        assert_relative_eq!(k2tilde_closed(l, 0.0).unwrap(), want, max_relative = 1e-13);
    }
}

#[test]
fn k2tilde_is_second_l_derivative_of_j2() {
    for &(l, j) in &[(1.0, 0.0), (2.0, 1.0), (5.0, 3.0), (10.0, 9.0)] {
        // Richardson-extrapolated central differences on the scale l²−j² of w
        let h = 1e-2 * (l * l - j * j) / l;
        let f = |x: f64| j2_closed(x, j).unwrap();
        let c = |h: f64| (f(l + h) - 2.0 * f(l) + f(l - h)) / (h * h);
        let d2 = (4.0 * c(0.5 * h) - c(h)) / 3.0;
        assert_relative_eq!(d2, k2tilde_closed(l, j).unwrap(), max_relative = 1e-5);
    }
}

#[test]
fn kbar_examples() {
    let v = kbar_gamma_num(1.0, 0.0, 1.0).unwrap();
    assert!(v > (-2f64.sqrt()).exp() && v < (-1.0f64).exp());
    // y^{1−γ} grows with γ on (0, 1)
    let mut last = 0.0;
    for gamma in [0.01, 0.1, 0.5, 1.0, 1.5, 1.9] {
        let v = kbar_gamma_num(2.0, 1.0, gamma).unwrap();
        assert!(v > last, "gamma {gamma}");
        last = v;
    }
    assert!(kbar_gamma_num(1.0, 0.0, 2.0).is_err());
    assert!(kbar_gamma_num(1.0, 2.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn log_i0_matches_integral(x in 0.0f64..60.0) {
        let a = log_i0(x).unwrap();
        prop_assert!((a - log_i0_oracle(x)).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn kbar_below_exponential_bound(l in 0.5f64..40.0, t in 0.0f64..0.95, gamma in 0.05f64..1.95) {
        // −l√(y²+1) + jy ≤ −√(l²−j²) and I₀(z) ≤ eᶻ
        let j = t * l;
        let w = ((l - j) * (l + j)).sqrt();
        let v = kbar_gamma_num(l, j, gamma).unwrap();
        prop_assert!(v > 0.0 && v <= (-w).exp() / (2.0 - gamma) * (1.0 + 1e-9));
    }
}
