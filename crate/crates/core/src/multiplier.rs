//! Reduced representations of the frequency multiplier and its splitting
//! `ζ̃ = ζ + ζ_K`.
//!
//! Every evaluator uses
//! `(1/p⁰) ∫ dq/q⁰ e^{−q⁰} (√s/g) ∫₀^∞ y dy/√(y²+1) · (inner)`
//! with overall constant 1. Exponential and Bessel factors are combined in
//! log space and the `e^{−q⁰}` weight is folded into the exponents.

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{
    log_kernel_ratio, phi_unchecked, sigma0_tail_integral, sqrt1p_m1, Interaction, KernelConfig, KernelError,
    LambdaVars,
};
use crate::kinematics::{Momentum, PairInvariants};
use crate::quadrature::{
    grading_power, integrate_q_region_vec, integrate_segments, AdaptOpts, QDecay, QPoint, QRegionOpts, QuadError,
    QuadResult, QuadSpec, Sample, Segment,
};
use crate::specfun::{exp_m1_fast, log_i0_unchecked};

pub use crate::quadrature::{RegionKind, RegionSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiplierError {
    #[error("degenerate pair: g = 0")]
    DegeneratePair,
    #[error("m must exceed 1, got {0}")]
    InvalidM(f64),
    #[error("domain error: j cos φ = {0} is not below l")]
    Domain(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Kernel factors shared by every inner integrand at one `y`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct KernelAt {
    /// `y/√(y²+1)`.
    pub jac: f64,
    pub wm1: f64,
    /// `s_Λ σ(g_Λ, θ_Λ)`.
    pub k: f64,
    /// `s_Λ σ · ratio`.
    pub kr: f64,
    /// `s_Λ σ · (ratio − 1)`.
    pub krm1: f64,
}

#[inline]
pub(crate) fn kernel_from_excess(pair: &PairInvariants, cfg: &KernelConfig, excess: f64) -> Option<(f64, f64, f64)> {
    let g2 = pair.g * pair.g;
    let gl2 = g2 + excess;
    if !(excess > 0.0) || !(gl2 > 0.0) {
        return None;
    }
    let u = excess / gl2;
    if u < cfg.delta {
        return None;
    }
    let rho = cfg.rho();
    let mut ln_sig = -cfg.angular_exponent() * u.ln();
    if let Interaction::BoundedDemo { sigma0_bound, .. } = cfg.interaction {
        ln_sig = ln_sig.min(sigma0_bound.ln());
    }
    let ln_phi = if rho == 0.0 { 0.0 } else { 0.5 * rho * g2.ln() };
    // K·ratio = sΦ(g)(g²/g_Λ²)²σ₀, evaluated directly
    let kr = pair.s * cfg.c_phi * (g2 / gl2).powi(2) * (ln_phi + ln_sig).exp();
    let lr = log_kernel_ratio(pair.s, g2, excess, rho);
    // K(ratio − 1) = −K·ratio·expm1(−ln ratio), and K = K·ratio − K(ratio − 1)
    let krm1 = -kr * exp_m1_fast(-lr);
    Some((kr - krm1, kr, krm1))
}

#[inline]
pub(crate) fn kernel_at(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Option<KernelAt> {
    let wm1 = sqrt1p_m1(y);
    let (k, kr, krm1) = kernel_from_excess(pair, cfg, 0.5 * pair.s * wm1)?;
    Some(KernelAt { jac: y / (1.0 + wm1), wm1, k, kr, krm1 })
}

/// `ln(E₁ I₀(jy))` and `ln(E₂ I₀(2jy))` with `E_k = e^{k l (1−√(y²+1))}`.
#[inline]
fn exponents(pair: &PairInvariants, wm1: f64, y: f64) -> (f64, f64) {
    let z = pair.j * y;
    let a1 = -pair.l * wm1 + log_i0_unchecked(z);
    let a2 = -2.0 * pair.l * wm1 + log_i0_unchecked(2.0 * z);
    (a1, a2)
}

fn check_pair(pair: &PairInvariants) -> Result<(), MultiplierError> {
    if pair.is_degenerate() {
        Err(MultiplierError::DegeneratePair)
    } else {
        Ok(())
    }
}

/// `s_Λσ · ratio · [1 − E₁I₀(jy)]`.
pub fn inner_zeta0(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    Ok(inner_terms(pair, cfg, y, 0.0).map_or(0.0, |t| t[0]) / jac_or_one(y))
}

/// `s_Λσ · E₁I₀(jy) · (ratio − 1)`.
pub fn inner_zeta_l(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    Ok(inner_terms(pair, cfg, y, 0.0).map_or(0.0, |t| t[1]) / jac_or_one(y))
}

/// `s_Λσ · ratio · [E₂I₀(2jy) − E₁I₀(jy)]`.
pub fn inner_tilde0(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    Ok(inner_terms(pair, cfg, y, 0.0).map_or(0.0, |t| t[2]) / jac_or_one(y))
}

/// `s_Λσ · (1 − ratio) · [E₂I₀(2jy) − E₁I₀(jy)]`.
pub fn inner_tilde_l(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    Ok(inner_terms(pair, cfg, y, 0.0).map_or(0.0, |t| t[3]) / jac_or_one(y))
}

/// `s_Λσ · ratio · [E₂I₀(2jy) − 2E₁I₀(jy) + 1]`, the φ-average of a square.
pub fn inner_zeta_square(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    Ok(inner_terms(pair, cfg, y, 0.0).map_or(0.0, |t| t[4]) / jac_or_one(y))
}

/// Integrand of the first representation, `s_Λσ [ratio − E₁I₀(jy)]`.
pub fn inner_rep1(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    let Some(ka) = kernel_at(pair, cfg, y) else { return Ok(0.0) };
    let (a1, _) = exponents(pair, ka.wm1, y);
    // ratio − E₁ = (ratio − 1) − (E₁ − 1)
    Ok(if a1 > -0.7 { ka.krm1 - ka.k * exp_m1_fast(a1) } else { ka.kr - ka.k * a1.exp() })
}

/// Integrand of the second representation, `s_Λσ [E₂I₀(2jy) − E₁I₀(jy)]`.
pub fn inner_rep2(pair: &PairInvariants, cfg: &KernelConfig, y: f64) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    let Some(ka) = kernel_at(pair, cfg, y) else { return Ok(0.0) };
    let (a1, a2) = exponents(pair, ka.wm1, y);
    Ok(ka.k * a1.exp() * exp_m1_fast(a2 - a1))
}

fn jac_or_one(y: f64) -> f64 {
    if y > 0.0 {
        y / (1.0 + sqrt1p_m1(y))
    } else {
        1.0
    }
}

/// `[ζ₀, ζ_L, ζ̃₀, ζ̃_L, square]` integrands times `y/√(y²+1)` and `e^{logw}`.
///
/// Differences of exponentials are formed before the weight is applied so
/// that the `O(y²)` cancellation near `y = 0` survives.
#[inline]
pub(crate) fn inner_terms(pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64) -> Option<[f64; 5]> {
    let ka = kernel_at(pair, cfg, y)?;
    let (a1, a2) = exponents(pair, ka.wm1, y);
    let w = logw.exp();
    let e1w = (a1 + logw).exp();
    let d21 = e1w * exp_m1_fast(a2 - a1);
    let sq = (2.0 * a1 + logw).exp() * exp_m1_fast(a2 - 2.0 * a1) + w * exp_m1_fast(a1).powi(2);
    Some([
        -ka.jac * ka.kr * w * exp_m1_fast(a1),
        ka.jac * ka.krm1 * e1w,
        ka.jac * ka.kr * d21,
        -ka.jac * ka.krm1 * d21,
        ka.jac * ka.kr * sq,
    ])
}

#[inline]
fn terms_rep1(pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64) -> [f64; 2] {
    let Some(ka) = kernel_at(pair, cfg, y) else { return [0.0; 2] };
    let a1 = -pair.l * ka.wm1 + log_i0_unchecked(pair.j * y);
    [-ka.jac * ka.kr * logw.exp() * exp_m1_fast(a1), ka.jac * ka.krm1 * (a1 + logw).exp()]
}

#[inline]
fn terms_all(pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64) -> [f64; 5] {
    inner_terms(pair, cfg, y, logw).unwrap_or([0.0; 5])
}

#[inline]
fn terms_rep2(pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64) -> [f64; 2] {
    let t = terms_all(pair, cfg, y, logw);
    [t[2], t[3]]
}

#[inline]
pub(crate) fn terms_gain_loss(pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64) -> [f64; 2] {
    let Some(ka) = kernel_at(pair, cfg, y) else { return [0.0; 2] };
    let (a1, a2) = exponents(pair, ka.wm1, y);
    [ka.jac * ka.k * (a1 + logw).exp(), ka.jac * ka.k * (a2 + logw).exp()]
}

/// `(y_m, y_s)`: maximum and zero of `l(1−√(y²+1)) + jy cos φ`.
pub fn bracket_critical_points(l: f64, j: f64, cos_phi: f64) -> Result<(f64, f64), MultiplierError> {
    let jc = j * cos_phi;
    if !(jc < l) {
        return Err(MultiplierError::Domain(jc));
    }
    let d = (l - jc) * (l + jc);
    Ok((jc / d.sqrt(), 2.0 * l * jc / d))
}

/// Largest `y` with `l(1−√(y²+1)) + jy = target` (`target ≤ l − √(l²−j²)`).
fn exponent_level_crossing(pair: &PairInvariants, target: f64) -> f64 {
    let (l, j) = (pair.l, pair.j);
    let w = pair.sqrt_l2_minus_j2.max(1e-300);
    let c = l - target;
    let disc = ((c - w) * (c + w)).max(0.0);
    (j * c + l * disc.sqrt()) / (w * w)
}

/// `y` with `g_Λ² − g² = excess`.
fn y_of_excess(pair: &PairInvariants, excess: f64) -> f64 {
    let wm1 = 2.0 * excess / pair.s;
    (wm1 * (wm1 + 2.0)).sqrt()
}

/// Panels for the inner `y` integral and the truncation point `Y`.
pub(crate) fn y_segments(pair: &PairInvariants, cfg: &KernelConfig, tail_log: f64) -> (Vec<Segment>, f64) {
    let g2 = pair.g * pair.g;
    let peak = pair.l - pair.sqrt_l2_minus_j2;
    let y_cut = exponent_level_crossing(pair, peak.min(0.0) - tail_log).max(1e-300);
    let start = if cfg.delta > 0.0 { y_of_excess(pair, cfg.delta * g2 / (1.0 - cfg.delta)) } else { 0.0 };
    let mut pts = vec![y_of_excess(pair, g2), 1.0 / pair.l.sqrt()];
    if let Some(uc) = cfg.demo_crossover() {
        pts.push(y_of_excess(pair, uc * g2 / (1.0 - uc)));
    }
    if pair.j > 0.0 {
        let w = pair.sqrt_l2_minus_j2;
        pts.push(pair.j / w);
        pts.push(2.0 * pair.l * pair.j / (w * w));
    }
    let mut pts: Vec<f64> = pts.into_iter().filter(|&x| x > start && x < y_cut).collect();
    pts.push(y_cut);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let first = pts[0];
    let mut all = vec![first];
    for &x in &pts[1..] {
        let mut prev = *all.last().unwrap();
        while x > 4.0 * prev {
            prev *= 4.0;
            all.push(prev);
        }
        all.push(x);
    }
    let mut segs = Vec::with_capacity(all.len() + 1);
    match cfg.small_y_exponent() {
        Some(alpha) if start == 0.0 => segs.push(Segment::GradedLeft { a: 0.0, b: first, k: grading_power(alpha) }),
        _ => {
            if first > start {
                segs.push(Segment::Linear { a: start, b: first });
            }
        }
    }
    for w in all.windows(2) {
        if w[1] > w[0] {
            segs.push(Segment::Linear { a: w[0], b: w[1] });
        }
    }
    (segs, y_cut)
}

/// `∫_Y^∞ y dy/√(y²+1) · s_Λσ·ratio = 2g²Φ(g)∫_{u_Y}^1 σ₀(u) du`.
pub(crate) fn ratio_tail(pair: &PairInvariants, cfg: &KernelConfig, y_cut: f64) -> f64 {
    let g2 = pair.g * pair.g;
    let ex = 0.5 * pair.s * sqrt1p_m1(y_cut);
    let u = ex / (g2 + ex);
    2.0 * g2 * phi_unchecked(pair.g, cfg) * sigma0_tail_integral(u, cfg)
}

/// `∫₀^∞ y dy/√(y²+1)` of a vector integrand, plus `tail · ratio_tail`.
pub(crate) fn y_integral<const N: usize, E>(
    pair: &PairInvariants,
    cfg: &KernelConfig,
    logw: f64,
    eval: E,
    tail: [f64; N],
    opts: AdaptOpts,
    tail_log: f64,
) -> Sample<N>
where
    E: Fn(&PairInvariants, &KernelConfig, f64, f64) -> [f64; N],
{
    let (segs, y_cut) = y_segments(pair, cfg, tail_log);
    let res = integrate_segments(|y| Sample::exact(eval(pair, cfg, y, logw)), &segs, opts);
    let mut out = match res {
        Ok(r) => r.as_sample(),
        Err(_) => return Sample { v: [f64::NAN; N], e: [f64::NAN; N] },
    };
    if tail.iter().any(|&c| c != 0.0) {
        let t = ratio_tail(pair, cfg, y_cut) * logw.exp();
        for k in 0..N {
            out.v[k] += tail[k] * t;
        }
    }
    out
}

/// Inner tolerance derived from the outer one.
pub(crate) fn inner_opts(spec: &QuadSpec) -> AdaptOpts {
    AdaptOpts::from(spec).rel((spec.rel_tol * 1e-2).clamp(1e-12, 1e-9))
}

/// Decay envelopes of the integrand families in `q`.
pub(crate) const DECAY_REP1: QDecay = QDecay { alpha: 0.25, beta: 0.75 };
pub(crate) const DECAY_REP2: QDecay = QDecay { alpha: 0.5, beta: 0.5 };

fn validate_region(region: &RegionSpec) -> Result<(), MultiplierError> {
    if region.kind != RegionKind::Full && !(region.m > 1.0) {
        return Err(MultiplierError::InvalidM(region.m));
    }
    Ok(())
}

/// Outer integral of a vector inner integrand over a region of `q`.
pub(crate) fn region_integral<const N: usize, E>(
    p: &Momentum,
    cfg: &KernelConfig,
    region: RegionSpec,
    spec: &QuadSpec,
    decay: QDecay,
    eval: E,
    tail: [f64; N],
) -> Result<([QuadResult; N], bool), MultiplierError>
where
    E: Fn(&PairInvariants, &KernelConfig, f64, f64) -> [f64; N] + Copy,
{
    spec.validate()?;
    cfg.validate()?;
    validate_region(&region)?;
    let p0 = p.p0();
    let r_max = spec.q_max_override.unwrap_or_else(|| decay.radius(p0, spec.tail_log));
    let iopts = inner_opts(spec);
    let (res, warnings) = integrate_q_region_vec(
        |q: &QPoint| {
            let pair = PairInvariants::from_parts(p0, q.q0, q.p_dot_q, q.diff, q.cross);
            if pair.is_degenerate() {
                return Sample::zero();
            }
            let inner = y_integral(&pair, cfg, -q.q0, eval, tail, iopts, spec.tail_log);
            let f = pair.s.sqrt() / (pair.g * q.q0 * p0);
            let mut out = inner;
            for k in 0..N {
                out.v[k] *= f;
                out.e[k] *= f;
            }
            out
        },
        p,
        region,
        r_max,
        QRegionOpts::from_spec(spec),
    )?;
    let out = std::array::from_fn(|k| QuadResult {
        value: res.value[k],
        err_estimate: res.err[k],
        evals: res.evals,
        warnings: warnings.clone(),
    });
    Ok((out, res.converged))
}

fn strict<const N: usize>(r: Result<([QuadResult; N], bool), MultiplierError>) -> Result<[QuadResult; N], MultiplierError> {
    let (out, converged) = r?;
    if !converged {
        let k = (0..N).max_by(|&a, &b| out[a].err_estimate.partial_cmp(&out[b].err_estimate).unwrap()).unwrap();
        return Err(QuadError::ToleranceUnreachable { value: out[k].value, err_estimate: out[k].err_estimate, evals: out[k].evals }.into());
    }
    Ok(out)
}

/// `ζ₀` restricted to a region.
pub fn zeta0(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    let [a, _] = strict(region_integral(p, cfg, region, spec, DECAY_REP1, terms_rep1, [1.0, 0.0]))?;
    Ok(a)
}

/// `ζ_L` restricted to a region.
pub fn zeta_l(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    let [_, b] = strict(region_integral(p, cfg, region, spec, DECAY_REP1, terms_rep1, [1.0, 0.0]))?;
    Ok(b)
}

/// `[ζ₀, ζ_L]` over a region in one sweep.
pub fn zeta0_and_l(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<[QuadResult; 2], MultiplierError> {
    strict(region_integral(p, cfg, region, spec, DECAY_REP1, terms_rep1, [1.0, 0.0]))
}

/// `ζ̃₀` restricted to a region.
pub fn tilde_zeta0(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    let [a, _] = strict(region_integral(p, cfg, region, spec, DECAY_REP2, terms_rep2, [0.0, 0.0]))?;
    Ok(a)
}

/// `ζ̃_L` restricted to a region.
pub fn tilde_zeta_l(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    let [_, b] = strict(region_integral(p, cfg, region, spec, DECAY_REP2, terms_rep2, [0.0, 0.0]))?;
    Ok(b)
}

/// `[ζ₀, ζ_L, ζ̃₀, ζ̃_L, square]` over a region in one sweep.
pub fn all_terms(p: &Momentum, cfg: &KernelConfig, region: RegionSpec, spec: &QuadSpec) -> Result<[QuadResult; 5], MultiplierError> {
    strict(region_integral(p, cfg, region, spec, DECAY_REP2, terms_all, [1.0, 0.0, 0.0, 0.0, 1.0]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rep {
    Rep1,
    Rep2,
}

/// `ζ̃` from the first (`ζ₀ + ζ_L`) or second (`ζ̃₀ + ζ̃_L`) representation.
pub fn tilde_zeta(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec, rep: Rep) -> Result<QuadResult, MultiplierError> {
    tilde_zeta_region(p, cfg, RegionSpec::full(), spec, rep)
}

pub fn tilde_zeta_region(
    p: &Momentum,
    cfg: &KernelConfig,
    region: RegionSpec,
    spec: &QuadSpec,
    rep: Rep,
) -> Result<QuadResult, MultiplierError> {
    let eval_rep1 = |pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64| {
        let t = terms_rep1(pair, cfg, y, logw);
        [t[0] + t[1]]
    };
    let eval_rep2 = |pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64| {
        let Some(ka) = kernel_at(pair, cfg, y) else { return [0.0] };
        let (a1, a2) = exponents(pair, ka.wm1, y);
        [ka.jac * ka.k * (a1 + logw).exp() * exp_m1_fast(a2 - a1)]
    };
    let [r] = match rep {
        Rep::Rep1 => strict(region_integral(p, cfg, region, spec, DECAY_REP1, eval_rep1, [1.0]))?,
        Rep::Rep2 => strict(region_integral(p, cfg, region, spec, DECAY_REP2, eval_rep2, [0.0]))?,
    };
    Ok(r)
}

/// Variable used for the inner integral of `ζ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZetaForm {
    YForm,
    RForm,
    KForm,
}

/// Per-pair inner integral of `ζ₀` (without the outer `√s/(g q⁰ p⁰)` factor
/// for the y-form; the r- and k-forms carry their own `1/g` convention and are
/// rescaled here to the same normalization).
pub fn zeta0_inner_integral(pair: &PairInvariants, cfg: &KernelConfig, form: ZetaForm, logw: f64, opts: AdaptOpts, tail_log: f64) -> Sample<1> {
    match form {
        ZetaForm::YForm => y_integral(
            pair,
            cfg,
            logw,
            |pair, cfg, y, logw| [terms_rep1(pair, cfg, y, logw)[0]],
            [1.0],
            opts,
            tail_log,
        ),
        ZetaForm::RForm => r_form_integral(pair, cfg, logw, opts, tail_log),
        ZetaForm::KForm => k_form_integral(pair, cfg, logw, opts, tail_log),
    }
}

/// `(1/√s) ∫₀^∞ r dr/√(r²+s) · s_Λσ·ratio·[1 − E₁I₀]`, i.e. the y-form value.
fn r_form_integral(pair: &PairInvariants, cfg: &KernelConfig, logw: f64, opts: AdaptOpts, tail_log: f64) -> Sample<1> {
    let rs = pair.s.sqrt();
    let (ysegs, y_cut) = y_segments(pair, cfg, tail_log);
    let segs: Vec<Segment> = ysegs.iter().map(|sg| scale_segment(sg, |y| y * rs)).collect();
    let res = integrate_segments(
        |r| {
            let root = (r * r + pair.s).sqrt();
            let excess = 0.5 * rs * r * r / (root + rs);
            let Some((_, kr, _)) = kernel_from_excess(pair, cfg, excess) else { return Sample::zero() };
            let a1 = -pair.l * r * r / (rs * (root + rs)) + log_i0_unchecked(pair.j * r / rs);
            Sample::exact([-(r / root) * kr * logw.exp() * exp_m1_fast(a1) / rs])
        },
        &segs,
        opts,
    );
    finish_form(res, pair, cfg, y_cut, logw)
}

/// `(1/√s)·(2/√s)... ` written as `(2/s) ∫₀^∞ dk s_Λσ·ratio·[1 − E₁I₀]` in `k = g_Λ² − g²`.
fn k_form_integral(pair: &PairInvariants, cfg: &KernelConfig, logw: f64, opts: AdaptOpts, tail_log: f64) -> Sample<1> {
    let s = pair.s;
    let (ysegs, y_cut) = y_segments(pair, cfg, tail_log);
    let to_k = |y: f64| 0.5 * s * sqrt1p_m1(y);
    let segs: Vec<Segment> = ysegs
        .iter()
        .map(|sg| match *sg {
            Segment::GradedLeft { a, b, .. } => Segment::GradedLeft {
                a: to_k(a),
                b: to_k(b),
                k: grading_power(cfg.small_y_exponent().map_or(0.0, |x| 0.5 * (x - 1.0))),
            },
            other => scale_segment(&other, to_k),
        })
        .collect();
    let res = integrate_segments(
        |k| {
            let Some((_, kr, _)) = kernel_from_excess(pair, cfg, k) else { return Sample::zero() };
            let a1 = -(pair.p0 + pair.q0) * k / (2.0 * s) + log_i0_unchecked(pair.cross_norm * (k * k + k * s).sqrt() / (pair.g * s));
            Sample::exact([-(2.0 / s) * kr * logw.exp() * exp_m1_fast(a1)])
        },
        &segs,
        opts,
    );
    finish_form(res, pair, cfg, y_cut, logw)
}

fn scale_segment(sg: &Segment, f: impl Fn(f64) -> f64) -> Segment {
    match *sg {
        Segment::Linear { a, b } => Segment::Linear { a: f(a), b: f(b) },
        Segment::GradedLeft { a, b, k } => Segment::GradedLeft { a: f(a), b: f(b), k },
        Segment::GradedRight { a, b, k } => Segment::GradedRight { a: f(a), b: f(b), k },
    }
}

fn finish_form(res: Result<crate::quadrature::VecResult<1>, QuadError>, pair: &PairInvariants, cfg: &KernelConfig, y_cut: f64, logw: f64) -> Sample<1> {
    match res {
        Ok(r) => {
            let mut s = r.as_sample();
            s.v[0] += ratio_tail(pair, cfg, y_cut) * logw.exp();
            s
        }
        Err(_) => Sample { v: [f64::NAN], e: [f64::NAN] },
    }
}

/// `ζ₀` over the full momentum space with the inner integral in the chosen variable.
pub fn zeta0_alt_forms(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec, form: ZetaForm) -> Result<QuadResult, MultiplierError> {
    spec.validate()?;
    cfg.validate()?;
    let p0 = p.p0();
    let r_max = spec.q_max_override.unwrap_or_else(|| DECAY_REP1.radius(p0, spec.tail_log));
    let iopts = inner_opts(spec);
    let (res, warnings) = integrate_q_region_vec(
        |q: &QPoint| {
            let pair = PairInvariants::from_parts(p0, q.q0, q.p_dot_q, q.diff, q.cross);
            if pair.is_degenerate() {
                return Sample::zero();
            }
            let inner = zeta0_inner_integral(&pair, cfg, form, -q.q0, iopts, spec.tail_log);
            let f = pair.s.sqrt() / (pair.g * q.q0 * p0);
            Sample { v: [inner.v[0] * f], e: [inner.e[0] * f] }
        },
        p,
        RegionSpec::full(),
        r_max,
        QRegionOpts::from_spec(spec),
    )?;
    let out = QuadResult { value: res.value[0], err_estimate: res.err[0], evals: res.evals, warnings };
    if !res.converged {
        return Err(QuadError::ToleranceUnreachable { value: out.value, err_estimate: out.err_estimate, evals: out.evals }.into());
    }
    Ok(out)
}

/// k-variable kernel arguments, re-exported for symmetry with the y-form.
pub fn k_form_vars(pair: &PairInvariants, k: f64) -> LambdaVars {
    crate::kernels::k_variable_vars(pair, k)
}

/// `ζ̃₀` integrand with the φ-average done by an `n`-point periodic rule.
pub fn inner_tilde0_phi_quadrature(pair: &PairInvariants, cfg: &KernelConfig, y: f64, n: usize) -> Result<f64, MultiplierError> {
    check_pair(pair)?;
    let Some(ka) = kernel_at(pair, cfg, y) else { return Ok(0.0) };
    let mut acc = 0.0;
    for i in 0..n {
        let c = (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos();
        let h = -pair.l * ka.wm1 + pair.j * y * c;
        acc += h.exp() * h.exp_m1();
    }
    Ok(ka.kr * acc / n as f64)
}

/// Quantity with its quadrature error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, err: 0.0 };

    pub fn from_result(r: &QuadResult) -> Self {
        Estimate { value: r.value, err: r.err_estimate }
    }

    pub fn plus(self, o: Estimate) -> Self {
        Estimate { value: self.value + o.value, err: self.err + o.err }
    }

    pub fn minus(self, o: Estimate) -> Self {
        Estimate { value: self.value - o.value, err: self.err + o.err }
    }

    pub fn scaled(self, c: f64) -> Self {
        Estimate { value: self.value * c, err: self.err * c.abs() }
    }
}

/// All pieces of `ζ̃ = ζ + ζ_K` at one momentum.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiplierBreakdown {
    pub p0: f64,
    pub cfg: KernelConfig,
    pub m: f64,
    pub calibration_constant: f64,
    pub tilde_zeta: Estimate,
    pub zeta: Estimate,
    pub zeta_k: Estimate,
    pub zeta0_full: Estimate,
    pub zeta_l_full: Estimate,
    pub zeta0m: Estimate,
    pub zeta_lm: Estimate,
    pub tilde_zeta0m: Estimate,
    pub tilde_zeta_lm: Estimate,
    pub tilde_zeta1: Estimate,
    /// Whether every quadrature met its tolerance.
    pub converged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MultiplierBreakdown {
    /// `ζ + ζ_K − ζ̃` and the combined error bound it should respect.
    pub fn closure_residual(&self) -> (f64, f64) {
        let r = self.zeta.value + self.zeta_k.value - self.tilde_zeta.value;
        (r, self.zeta.err + self.zeta_k.err + self.tilde_zeta.err)
    }
}

/// Default `m = ⌈5(|ρ| + 8)⌉`.
pub fn default_m(cfg: &KernelConfig) -> f64 {
    (5.0 * (cfg.rho().abs() + 8.0)).ceil()
}

/// `(p⁰)^{(ρ+γ)/2}`, the added positive term for `|p| ≤ 1`.
pub fn small_p_term(p0: f64, cfg: &KernelConfig) -> f64 {
    p0.powf(0.5 * (cfg.rho() + cfg.gamma))
}

fn est_of(r: &([QuadResult; 5], bool), k: usize) -> Estimate {
    Estimate::from_result(&r.0[k])
}

/// Every component of the splitting at `p`.
///
/// Quadratures that exhaust their budget still contribute their best
/// estimate; `converged` records whether that happened.
pub fn breakdown(p: &Momentum, cfg: &KernelConfig, m: f64, spec: &QuadSpec) -> Result<MultiplierBreakdown, MultiplierError> {
    if !(m > 1.0) {
        return Err(MultiplierError::InvalidM(m));
    }
    let pn = p.norm();
    let p0 = p.p0();
    let mut converged = true;
    let mut warnings = Vec::new();
    let small = region_integral(p, cfg, RegionSpec::small(m), spec, DECAY_REP2, terms_all, [1.0, 0.0, 0.0, 0.0, 1.0])?;
    let (large, lc) = region_integral(p, cfg, RegionSpec::large(m), spec, DECAY_REP1, terms_rep1, [1.0, 0.0])?;
    converged &= small.1 && lc;
    warnings.extend(small.0[0].warnings.iter().cloned());
    warnings.extend(large[0].warnings.iter().cloned());
    warnings.dedup();
    let z0s = est_of(&small, 0);
    let zls = est_of(&small, 1);
    let t0s = est_of(&small, 2);
    let tls = est_of(&small, 3);
    let sq = est_of(&small, 4);
    let z0l = Estimate::from_result(&large[0]);
    let zll = Estimate::from_result(&large[1]);
    let zeta0_full = z0s.plus(z0l);
    let zeta_l_full = zls.plus(zll);
    let tilde_zeta = zeta0_full.plus(zeta_l_full);
    let big = pn >= 1.0;
    let ind = |e: Estimate| if big { e } else { Estimate::ZERO };
    let (zeta0m, zeta_lm, tilde_zeta0m, tilde_zeta_lm) = (ind(z0s), ind(zls), ind(t0s), ind(tls));
    let tilde_zeta1 = ind(z0l.plus(zll));
    let extra = if pn <= 1.0 { small_p_term(p0, cfg) } else { 0.0 };
    let zeta = ind(sq.scaled(0.5)).plus(Estimate { value: extra, err: 0.0 });
    let mut zeta_k = tilde_zeta1.plus(zeta_lm.plus(tilde_zeta_lm).scaled(0.5));
    if pn <= 1.0 {
        zeta_k = zeta_k.plus(tilde_zeta).minus(Estimate { value: extra, err: 0.0 });
    }
    Ok(MultiplierBreakdown {
        p0,
        cfg: *cfg,
        m,
        calibration_constant: 1.0,
        tilde_zeta,
        zeta,
        zeta_k,
        zeta0_full,
        zeta_l_full,
        zeta0m,
        zeta_lm,
        tilde_zeta0m,
        tilde_zeta_lm,
        tilde_zeta1,
        converged,
        warnings,
    })
}

/// `ζ = ½[ζ₀,m + ζ̃₀,m] + (p⁰)^{(ρ+γ)/2} 1_{|p|≤1}`.
pub fn zeta(p: &Momentum, cfg: &KernelConfig, m: f64, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    if !(m > 1.0) {
        return Err(MultiplierError::InvalidM(m));
    }
    let pn = p.norm();
    let mut out = QuadResult::new(0.0, 0.0, 0);
    if pn >= 1.0 {
        let sq = |pair: &PairInvariants, cfg: &KernelConfig, y: f64, logw: f64| [terms_all(pair, cfg, y, logw)[4]];
        let [r] = strict(region_integral(p, cfg, RegionSpec::small(m), spec, DECAY_REP2, sq, [1.0]))?;
        out = QuadResult { value: 0.5 * r.value, err_estimate: 0.5 * r.err_estimate, evals: r.evals, warnings: r.warnings };
    }
    if pn <= 1.0 {
        out.value += small_p_term(p.p0(), cfg);
    }
    Ok(out)
}

/// `ζ_K = ζ̃ 1_{|p|≤1} + ζ̃₁ + ½(ζ_L,m + ζ̃_L,m) − (p⁰)^{(ρ+γ)/2} 1_{|p|≤1}`.
pub fn zeta_k(p: &Momentum, cfg: &KernelConfig, m: f64, spec: &QuadSpec) -> Result<QuadResult, MultiplierError> {
    let b = breakdown(p, cfg, m, spec)?;
    if !b.converged {
        return Err(QuadError::ToleranceUnreachable { value: b.zeta_k.value, err_estimate: b.zeta_k.err, evals: 0 }.into());
    }
    Ok(QuadResult::new(b.zeta_k.value, b.zeta_k.err, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::pair_invariants;

    #[test]
    fn level_crossing_solves_exponent() {
        let p = Momentum::new(1.0, 0.5, 0.0);
        let q = Momentum::new(0.2, 0.9, -0.3);
        let pair = pair_invariants(&p, &q);
        let y = exponent_level_crossing(&pair, -40.0);
        let h = pair.l * (1.0 - (y * y + 1.0).sqrt()) + pair.j * y;
        assert!((h + 40.0).abs() < 1e-9);
    }
}
