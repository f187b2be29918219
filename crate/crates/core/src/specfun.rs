//! `ln I₀` and the closed-form Bessel-weighted integrals.

use thiserror::Error;

use crate::quadrature::{grading_power, integrate_segments, AdaptOpts, QuadError, QuadSpec, Sample, Segment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("argument {0} outside the domain")]
    Domain(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Crossover between the power series and the large-argument expansion.
///
/// The expansion's smallest term is about `e^{−2x}`, so it only reaches
/// double precision for `x ≳ 19`; the all-positive power series is exact
/// to rounding well past that.
pub const LOG_I0_SWITCH: f64 = 30.0;

/// `ln I₀(x)` for `x ≥ 0`.
pub fn log_i0(x: f64) -> Result<f64, SpecfunError> {
    if !(x >= 0.0) {
        return Err(SpecfunError::Domain(x));
    }
    Ok(log_i0_unchecked(x))
}

/// `ln I₀(|x|)` without the domain check, for inner loops.
#[inline]
pub fn log_i0_unchecked(x: f64) -> f64 {
    let x = x.abs();
    if x < LOG_I0_SWITCH {
        let t = 0.25 * x * x;
        // I₀ − 1 = Σ_{k≥1} t^k/(k!)²
        let mut term = t;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            k += 1.0;
            term *= t / (k * k);
        }
        ln_1p_fast(sum)
    } else {
        // I₀(x) ~ e^x/√(2πx) Σ_k ((2k−1)!!)²/(k!(8x)^k)
        let z = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            let m = 2.0 * k + 1.0;
            term *= m * m * z / (k + 1.0);
            if term < 1e-17 * sum || k > 60.0 {
                break;
            }
            sum += term;
            k += 1.0;
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
    }
}

/// `ln(1 + x)`; the plain logarithm is exact enough once `x` is not small.
#[inline]
pub fn ln_1p_fast(x: f64) -> f64 {
    if x > 0.25 {
        (1.0 + x).ln()
    } else {
        x.ln_1p()
    }
}

/// `eˣ − 1`; the plain exponential is exact enough once `|x|` is not small.
#[inline]
pub fn exp_m1_fast(x: f64) -> f64 {
    if x.abs() > 0.5 {
        x.exp() - 1.0
    } else {
        x.exp_m1()
    }
}

/// `∫₀^∞ y e^{−l√(y²+1)} I₀(jy)/√(y²+1) dy = e^{−w}/w`, `w = √(l²−j²)`.
pub fn j2_closed(l: f64, j: f64) -> Result<f64, SpecfunError> {
    if !(l > 0.0) || !(j >= 0.0) || j >= l {
        return Err(SpecfunError::Domain(j));
    }
    let w = ((l - j) * (l + j)).sqrt();
    Ok((-w).exp() / w)
}

/// `∫₀^∞ y √(y²+1) e^{−l√(y²+1)} I₀(jy) dy` in closed form.
pub fn k2tilde_closed(l: f64, j: f64) -> Result<f64, SpecfunError> {
    if !(l > 0.0) || !(j >= 0.0) || j >= l {
        return Err(SpecfunError::Domain(j));
    }
    let w = ((l - j) * (l + j)).sqrt();
    Ok(w.powi(-5) * (-w).exp() * ((w * w + 3.0 * w + 3.0) * l * l - w * w - w * w * w))
}

/// `∫₀¹ y^{1−γ} e^{−l√(y²+1)} I₀(jy) dy` by graded quadrature.
pub fn kbar_gamma_num(l: f64, j: f64, gamma: f64) -> Result<f64, SpecfunError> {
    if !(l > 0.0) || !(j >= 0.0) || j > l {
        return Err(SpecfunError::Domain(j));
    }
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(SpecfunError::Domain(gamma));
    }
    let opts = AdaptOpts::from(&QuadSpec::inner());
    let k = grading_power(1.0 - gamma);
    let r = integrate_segments(
        |y| {
            let wm1 = y * y / ((y * y + 1.0).sqrt() + 1.0);
            Sample::exact([y.powf(1.0 - gamma) * (-l - l * wm1 + log_i0_unchecked(j * y)).exp()])
        },
        &[Segment::GradedLeft { a: 0.0, b: 1.0, k }],
        opts,
    )?;
    if !r.converged {
        return Err(QuadError::ToleranceUnreachable { value: r.value[0], err_estimate: r.err[0], evals: r.evals }.into());
    }
    Ok(r.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_known_values() {
        assert_eq!(log_i0(0.0).unwrap(), 0.0);
        assert!((log_i0(1.0).unwrap() - 1.266_065_877_752_008_4f64.ln()).abs() < 1e-15);
        // I₀(50) = 2.93255378384933e20
        assert!((log_i0(50.0).unwrap() - 2.932_553_783_849_336e20f64.ln()).abs() < 1e-13);
        assert!(log_i0(-1.0).is_err());
    }

    #[test]
    fn branches_agree_at_switch() {
        // reference values from 50-digit arithmetic
        let a = log_i0_unchecked(29.999_999_999);
        let b = log_i0_unchecked(30.000_000_001);
        assert!((a - 27.384_701_432_188_7).abs() < 1e-13 * a);
        assert!((b - 27.384_701_434_155_1).abs() < 1e-13 * b);
    }
}
