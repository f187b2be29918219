//! Momentum scans, log-log exponent fits and the large-momentum bound checks.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernels::KernelConfig;
use crate::kinematics::{norm, Momentum, Vec3};
use crate::multiplier::{breakdown, MultiplierBreakdown, MultiplierError};
use crate::quadrature::QuadSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub r2: f64,
    pub n: usize,
}

/// Power-law fit `log|value| = intercept + slope·log p⁰`.
pub type ExponentFit = LinearFit;

/// Values below this magnitude are dropped before taking logarithms.
pub const ABS_FLOOR: f64 = 1e-300;

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, AsymptoticsError> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(AsymptoticsError::InsufficientData(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(AsymptoticsError::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>().max(0.0);
    let std_err = (sse / (nf - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LinearFit { slope, intercept, std_err, r2, n })
}

/// Log-log least squares on `(p⁰, |value|)`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit, AsymptoticsError> {
    let (x, y): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|(p0, v)| *p0 > 0.0 && v.abs() >= ABS_FLOOR && v.is_finite())
        .map(|(p0, v)| (p0.ln(), v.abs().ln()))
        .unzip();
    linear_fit(&x, &y)
}

/// `n` log-spaced points on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>, AsymptoticsError> {
    if !(a > 0.0 && b > a) || n < 2 {
        return Err(AsymptoticsError::InvalidGrid(format!("LOG:{a}:{b}:{n}")));
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// Breakdowns at `p = √(p0² − 1)·direction`, in grid order.
pub fn scan(
    p0_grid: &[f64],
    direction: Vec3,
    cfg: &KernelConfig,
    m: f64,
    spec: &QuadSpec,
) -> Result<Vec<Result<MultiplierBreakdown, MultiplierError>>, AsymptoticsError> {
    if p0_grid.iter().any(|&x| !(x >= 1.0)) || p0_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AsymptoticsError::InvalidGrid("p0 values must be >= 1 and strictly increasing".into()));
    }
    let dn = norm(&direction);
    if !(dn > 0.0) || !dn.is_finite() {
        return Err(AsymptoticsError::InvalidGrid("direction must be a nonzero vector".into()));
    }
    let dir = [direction[0] / dn, direction[1] / dn, direction[2] / dn];
    Ok(p0_grid
        .par_iter()
        .map(|&p0| breakdown(&Momentum::with_energy(p0, dir), cfg, m, spec))
        .collect())
}

/// One pass/fail line of a bound report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub target_zeta_slope: f64,
    pub zeta: ExponentFit,
    pub zeta0: ExponentFit,
    pub zeta_l: ExponentFit,
    pub zeta_k: ExponentFit,
    pub tilde_zeta_lm: ExponentFit,
    /// `log|ζ̃₁|` against `(p⁰)^{1/m}`.
    pub tilde_zeta1_stretched: LinearFit,
    pub zeta_positive: bool,
    pub tilde_zeta1_decreasing: bool,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Tolerance on the fitted `ζ` slope.
pub const ZETA_SLOPE_TOL: f64 = 0.05;
/// Tolerance added to the one-sided slope bounds.
pub const SLOPE_BOUND_TOL: f64 = 0.1;
/// The `ε` of the lower-order bounds.
pub const EPSILON: f64 = 0.2;
/// Fits only use `p⁰` at or above this value.
pub const FIT_MIN_P0: f64 = 10.0;

/// Exponent and sign checks over a scan.
pub fn check_bounds(breakdowns: &[MultiplierBreakdown], cfg: &KernelConfig) -> Result<BoundsReport, AsymptoticsError> {
    let pts: Vec<&MultiplierBreakdown> = breakdowns.iter().filter(|b| b.p0 >= FIT_MIN_P0).collect();
    if pts.len() < 8 {
        return Err(AsymptoticsError::InsufficientData(format!("need 8 points with p0 >= {FIT_MIN_P0}, got {}", pts.len())));
    }
    let lo = pts.iter().map(|b| b.p0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|b| b.p0).fold(0.0, f64::max);
    if (hi / lo).log10() < 1.5 {
        return Err(AsymptoticsError::InsufficientData(format!("grid spans {:.2} decades, need 1.5", (hi / lo).log10())));
    }
    let fit = |f: &dyn Fn(&MultiplierBreakdown) -> f64| fit_exponent(&pts.iter().map(|b| (b.p0, f(b))).collect::<Vec<_>>());
    let rho = cfg.rho();
    let target = 0.5 * (rho + cfg.gamma);
    let zeta = fit(&|b| b.zeta.value)?;
    let zeta0 = fit(&|b| b.zeta0_full.value)?;
    let zeta_l = fit(&|b| b.zeta_l_full.value)?;
    let zeta_k = fit(&|b| b.zeta_k.value)?;
    let tilde_zeta_lm = fit(&|b| b.tilde_zeta_lm.value)?;
    let (sx, sy): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|b| b.tilde_zeta1.value.abs() >= ABS_FLOOR)
        .map(|b| (b.p0.powf(1.0 / b.m), b.tilde_zeta1.value.abs().ln()))
        .unzip();
    let stretched = linear_fit(&sx, &sy)?;
    let zeta_positive = breakdowns.iter().all(|b| b.zeta.value > 0.0);
    let decreasing = pts.windows(2).all(|w| w[1].tilde_zeta1.value.abs() < w[0].tilde_zeta1.value.abs());
    let mk = |name: &str, value: f64, bound: String, pass: bool| BoundCheck { name: name.into(), value, bound, pass };
    let checks = vec![
        mk("zeta slope", zeta.slope, format!("{target} ± {ZETA_SLOPE_TOL}"), (zeta.slope - target).abs() <= ZETA_SLOPE_TOL),
        mk("zeta > 0", if zeta_positive { 1.0 } else { 0.0 }, "all points".into(), zeta_positive),
        mk(
            "|zeta0| slope",
            zeta0.slope,
            format!("<= {}", target + SLOPE_BOUND_TOL),
            zeta0.slope <= target + SLOPE_BOUND_TOL,
        ),
        mk("|zetaL| slope", zeta_l.slope, format!("<= {}", 0.5 * rho + SLOPE_BOUND_TOL), zeta_l.slope <= 0.5 * rho + SLOPE_BOUND_TOL),
        mk(
            "|tildeZetaLm| slope",
            tilde_zeta_lm.slope,
            format!("<= {}", 0.5 * rho + EPSILON + SLOPE_BOUND_TOL),
            tilde_zeta_lm.slope <= 0.5 * rho + EPSILON + SLOPE_BOUND_TOL,
        ),
        mk("|zetaK| slope", zeta_k.slope, format!("<= {}", 0.5 * rho + EPSILON), zeta_k.slope <= 0.5 * rho + EPSILON),
        mk(
            "log|tildeZeta1| vs p0^(1/m) slope",
            stretched.slope,
            "< 0 with r2 >= 0.9".into(),
            stretched.slope < 0.0 && stretched.r2 >= 0.9,
        ),
    ];
    Ok(BoundsReport {
        target_zeta_slope: target,
        zeta,
        zeta0,
        zeta_l,
        zeta_k,
        tilde_zeta_lm,
        tilde_zeta1_stretched: stretched,
        zeta_positive,
        tilde_zeta1_decreasing: decreasing,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = log_grid(10.0, 1000.0, 12).unwrap().into_iter().map(|p| (p, 7.0 * p.powf(0.75))).collect();
        let f = fit_exponent(&s).unwrap();
        assert!((f.slope - 0.75).abs() < 1e-12);
        assert!(f.std_err < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(10.0, 1000.0, 3).unwrap();
        assert_eq!(g[0], 10.0);
        assert!((g[1] - 100.0).abs() < 1e-12);
        assert_eq!(g[2], 1000.0);
    }
}
