//! Collision kernels `σ(g, θ) = Φ(g) σ₀(θ)` and the Λ-frame kernel variables.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::kinematics::PairInvariants;
use crate::specfun::ln_1p_fast;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameters: {0}")]
    InvalidConfig(String),
    #[error("cannot parse kernel spec `{0}`")]
    Parse(String),
    #[error("soft potential evaluated at g = 0")]
    SingularArgument,
    #[error("sin²(θ/2) = {0} outside (0, 1]")]
    Domain(f64),
    #[error("degenerate pair: g = 0")]
    DegeneratePair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum Interaction {
    Hard { a: f64 },
    Soft { b: f64 },
    BoundedDemo { a: f64, sigma0_bound: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelConfig {
    pub gamma: f64,
    pub interaction: Interaction,
    pub c_phi: f64,
    /// Angular cutoff on `sin²(θ/2)`; zero means non-cutoff.
    pub delta: f64,
}

impl KernelConfig {
    pub fn new(gamma: f64, interaction: Interaction, c_phi: f64, delta: f64) -> Result<Self, KernelError> {
        let cfg = KernelConfig { gamma, interaction, c_phi, delta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hard(a: f64, gamma: f64) -> Result<Self, KernelError> {
        Self::new(gamma, Interaction::Hard { a }, 1.0, 0.0)
    }

    pub fn soft(b: f64, gamma: f64) -> Result<Self, KernelError> {
        Self::new(gamma, Interaction::Soft { b }, 1.0, 0.0)
    }

    pub fn demo(a: f64, bound: f64, gamma: f64) -> Result<Self, KernelError> {
        Self::new(gamma, Interaction::BoundedDemo { a, sigma0_bound: bound }, 1.0, 0.0)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self, KernelError> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c_phi(mut self, c_phi: f64) -> Result<Self, KernelError> {
        self.c_phi = c_phi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let g = self.gamma;
        let bad = |m: &str| Err(KernelError::InvalidConfig(m.to_string()));
        if !(g > 0.0 && g < 2.0) {
            return bad("gamma must lie in (0, 2)");
        }
        match self.interaction {
            Interaction::Hard { a } if !(a >= -g && a < 2.0) => return bad("hard: need -gamma <= a < 2"),
            Interaction::Soft { b } if !(b > g && b < 2.0) => return bad("soft: need gamma < b < 2"),
            Interaction::BoundedDemo { a, sigma0_bound } if !((0.0..2.0).contains(&a) && sigma0_bound > 0.0) => {
                return bad("demo: need 0 <= a < 2 and bound > 0")
            }
            _ => {}
        }
        if !(self.c_phi >= 0.0 && self.c_phi.is_finite()) {
            return bad("c_phi must be finite and non-negative");
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad("delta must lie in [0, 1)");
        }
        Ok(())
    }

    /// `ρ = a` for hard and bounded-demo, `−b` for soft.
    pub fn rho(&self) -> f64 {
        match self.interaction {
            Interaction::Hard { a } | Interaction::BoundedDemo { a, .. } => a,
            Interaction::Soft { b } => -b,
        }
    }

    /// Exponent `1 + γ/2` of the canonical angular kernel.
    pub fn angular_exponent(&self) -> f64 {
        1.0 + 0.5 * self.gamma
    }

    /// True when σ₀ is bounded near θ = 0 (cutoff or bounded demo).
    pub fn is_integrable(&self) -> bool {
        self.delta > 0.0 || matches!(self.interaction, Interaction::BoundedDemo { .. })
    }

    /// Power of `y` in the reduced integrands as `y → 0`, if singular.
    pub fn small_y_exponent(&self) -> Option<f64> {
        if self.is_integrable() {
            None
        } else {
            Some(1.0 - self.gamma)
        }
    }

    /// `sin²(θ/2)` below which σ₀ switches from the canonical branch to its bound.
    pub fn demo_crossover(&self) -> Option<f64> {
        match self.interaction {
            Interaction::BoundedDemo { sigma0_bound, .. } => {
                let uc = sigma0_bound.powf(-1.0 / self.angular_exponent());
                (uc < 1.0).then_some(uc)
            }
            _ => None,
        }
    }
}

impl fmt::Display for KernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.interaction {
            Interaction::Hard { a } => write!(f, "hard:a={a},gamma={}", self.gamma)?,
            Interaction::Soft { b } => write!(f, "soft:b={b},gamma={}", self.gamma)?,
            Interaction::BoundedDemo { a, sigma0_bound } => write!(f, "demo:a={a},bound={sigma0_bound},gamma={}", self.gamma)?,
        }
        if self.delta > 0.0 {
            write!(f, ",delta={}", self.delta)?;
        }
        if self.c_phi != 1.0 {
            write!(f, ",cphi={}", self.c_phi)?;
        }
        Ok(())
    }
}

impl FromStr for KernelConfig {
    type Err = KernelError;

    /// `hard:a=1,gamma=0.5`, `soft:b=1.5,gamma=1.2`, `demo:a=0,bound=1`,
    /// each optionally followed by `,delta=…` and `,cphi=…`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let perr = || KernelError::Parse(s.to_string());
        let (class, rest) = s.trim().split_once(':').ok_or_else(perr)?;
        let mut a = None;
        let mut b = None;
        let mut gamma = None;
        let mut bound = None;
        let mut delta = 0.0;
        let mut c_phi = 1.0;
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(perr)?;
            let v: f64 = v.trim().parse().map_err(|_| perr())?;
            match k.trim() {
                "a" => a = Some(v),
                "b" => b = Some(v),
                "gamma" => gamma = Some(v),
                "bound" => bound = Some(v),
                "delta" => delta = v,
                "cphi" => c_phi = v,
                _ => return Err(perr()),
            }
        }
        let interaction = match class.trim() {
            "hard" if b.is_none() && bound.is_none() => Interaction::Hard { a: a.ok_or_else(perr)? },
            "soft" if a.is_none() && bound.is_none() => Interaction::Soft { b: b.ok_or_else(perr)? },
            "demo" if b.is_none() => Interaction::BoundedDemo { a: a.unwrap_or(0.0), sigma0_bound: bound.ok_or_else(perr)? },
            _ => return Err(perr()),
        };
        let gamma = match (class.trim(), gamma) {
            (_, Some(g)) => g,
            ("demo", None) => 1.0,
            _ => return Err(perr()),
        };
        KernelConfig::new(gamma, interaction, c_phi, delta)
    }
}

/// `Φ(g)`: `C_Φ g^a` (hard, demo) or `C_Φ g^{−b}` (soft).
pub fn phi(g: f64, cfg: &KernelConfig) -> Result<f64, KernelError> {
    if let Interaction::Soft { .. } = cfg.interaction {
        if g == 0.0 {
            return Err(KernelError::SingularArgument);
        }
    }
    Ok(phi_unchecked(g, cfg))
}

#[inline]
pub(crate) fn phi_unchecked(g: f64, cfg: &KernelConfig) -> f64 {
    let rho = cfg.rho();
    if rho == 0.0 {
        cfg.c_phi
    } else {
        cfg.c_phi * g.powf(rho)
    }
}

/// Angular kernel as a function of `u = sin²(θ/2)`.
pub fn sigma0(sin2_half: f64, cfg: &KernelConfig) -> Result<f64, KernelError> {
    if !(sin2_half > 0.0 && sin2_half <= 1.0) {
        return Err(KernelError::Domain(sin2_half));
    }
    Ok(sigma0_unchecked(sin2_half, cfg))
}

#[inline]
pub(crate) fn sigma0_unchecked(u: f64, cfg: &KernelConfig) -> f64 {
    if u < cfg.delta {
        return 0.0;
    }
    let canon = u.powf(-cfg.angular_exponent());
    match cfg.interaction {
        Interaction::BoundedDemo { sigma0_bound, .. } => canon.min(sigma0_bound),
        _ => canon,
    }
}

/// `∫_{u0}^1 σ₀(u) du` in closed form (`u0 > 0`, or any `u0` with a cutoff).
pub fn sigma0_tail_integral(u0: f64, cfg: &KernelConfig) -> f64 {
    let lo = u0.max(cfg.delta).min(1.0);
    let e = cfg.angular_exponent();
    let canon = |a: f64| -> f64 {
        // ∫_a^1 u^{-e} du = expm1((1−e) ln a)/(e−1)
        if a >= 1.0 {
            0.0
        } else {
            ((1.0 - e) * a.ln()).exp_m1() / (e - 1.0)
        }
    };
    match cfg.interaction {
        Interaction::BoundedDemo { sigma0_bound, .. } => match cfg.demo_crossover() {
            None => sigma0_bound * (1.0 - lo),
            Some(uc) => {
                if lo >= uc {
                    canon(lo)
                } else {
                    sigma0_bound * (uc - lo) + canon(uc)
                }
            }
        },
        _ => canon(lo),
    }
}

/// Kernel arguments after the Λ change of frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaVars {
    pub g_lambda2: f64,
    pub s_lambda: f64,
    pub sin2_half_theta_lambda: f64,
    pub cos_theta_lambda: f64,
    /// `g_Λ² − g²`, kept separately to avoid cancellation.
    pub excess: f64,
}

fn vars_from_excess(g2: f64, k: f64) -> LambdaVars {
    let gl2 = g2 + k;
    let (u, c) = if gl2 > 0.0 { (k / gl2, (g2 - k) / gl2) } else { (0.0, 1.0) };
    LambdaVars { g_lambda2: gl2, s_lambda: gl2 + 4.0, sin2_half_theta_lambda: u, cos_theta_lambda: c, excess: k }
}

/// `√(y²+1) − 1` without cancellation.
#[inline]
pub fn sqrt1p_m1(y: f64) -> f64 {
    y * y / ((y * y + 1.0).sqrt() + 1.0)
}

/// `g_Λ² = g² + s y²/(2(√(y²+1)+1))`.
pub fn lambda_vars(pair: &PairInvariants, y: f64) -> LambdaVars {
    vars_from_excess(pair.g * pair.g, 0.5 * pair.s * sqrt1p_m1(y))
}

/// `g_Λ² = g² + k`, `sin²(θ_Λ/2) = k/(g²+k)`.
pub fn k_variable_vars(pair: &PairInvariants, k: f64) -> LambdaVars {
    vars_from_excess(pair.g * pair.g, k)
}

/// `ln` of `sΦ(g)g⁴ / (s_Λ Φ(g_Λ) g_Λ⁴)`.
#[inline]
pub(crate) fn log_kernel_ratio(s: f64, g2: f64, excess: f64, rho: f64) -> f64 {
    -ln_1p_fast(excess / s) - (2.0 + 0.5 * rho) * ln_1p_fast(excess / g2)
}

pub fn kernel_ratio(pair: &PairInvariants, lv: &LambdaVars, cfg: &KernelConfig) -> Result<f64, KernelError> {
    if pair.is_degenerate() {
        return Err(KernelError::DegeneratePair);
    }
    Ok(log_kernel_ratio(pair.s, pair.g * pair.g, lv.excess, cfg.rho()).exp())
}

/// `s_Λ σ(g_Λ, θ_Λ)`; zero at `θ_Λ = 0`.
pub fn s_sigma_lambda(lv: &LambdaVars, cfg: &KernelConfig) -> f64 {
    if lv.sin2_half_theta_lambda <= 0.0 {
        return 0.0;
    }
    lv.s_lambda * phi_unchecked(lv.g_lambda2.sqrt(), cfg) * sigma0_unchecked(lv.sin2_half_theta_lambda, cfg)
}
