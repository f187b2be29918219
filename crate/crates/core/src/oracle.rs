//! Evaluations of the frequency multiplier straight from its collision
//! integral, the reduced gain and loss terms, calibration of the overall
//! constant, and the divergent post-collision loss integral.
//!
//! The sphere is parametrized about the forward direction `ω₀` (the
//! direction that returns `p′ = p`) by `u = sin²(θ/2)` and the azimuth `φ`.
//! There `(q⁰ − q′⁰)/2 = −u(p⁰ − q⁰)/2 + |p×q| sinθ cos φ/(2√s)`.

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{phi_unchecked, sigma0_unchecked, sqrt1p_m1, KernelConfig, KernelError};
use crate::kinematics::{Momentum, PairInvariants};
use crate::multiplier::{self, kernel_from_excess, terms_gain_loss, MultiplierError, Rep, DECAY_REP2};
use crate::quadrature::{
    grading_power, integrate_q_region_vec, integrate_segments, mc_integrate, AdaptOpts, JuttnerSampler, McResult,
    QDecay, QPoint, QRegionOpts, QuadError, QuadResult, QuadSpec, RegionSpec, Sample, Segment,
};
use crate::specfun::log_i0_unchecked;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("calibration unstable: relative spread {spread:.3e} exceeds {limit:.1e}")]
    CalibrationUnstable { spread: f64, limit: f64, ratios: Vec<f64> },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Multiplier(#[from] MultiplierError),
}

/// Azimuthal averages of `−expm1(α + β cos φ)` and `e^{α + β cos φ}` by the
/// periodic trapezoid rule, doubled until stable.
pub fn phi_averages(alpha: f64, beta: f64) -> (f64, f64) {
    let f = |c: f64| {
        let x = alpha + beta * c;
        (-x.exp_m1(), x.exp())
    };
    let mut n = 8usize;
    let mut sum_d = 0.0;
    let mut sum_g = 0.0;
    for k in 0..n {
        let (d, g) = f((2.0 * std::f64::consts::PI * k as f64 / n as f64).cos());
        sum_d += d;
        sum_g += g;
    }
    let (mut avg_d, mut avg_g) = (sum_d / n as f64, sum_g / n as f64);
    while n < 1 << 14 {
        // odd nodes of the doubled grid
        for k in 0..n {
            let (d, g) = f((std::f64::consts::PI * (2 * k + 1) as f64 / n as f64).cos());
            sum_d += d;
            sum_g += g;
        }
        n *= 2;
        let (nd, ng) = (sum_d / n as f64, sum_g / n as f64);
        let scale = avg_g.abs() + 1.0;
        let done = (nd - avg_d).abs() <= 1e-14 * scale && (ng - avg_g).abs() <= 1e-14 * avg_g.abs();
        avg_d = nd;
        avg_g = ng;
        if done {
            break;
        }
    }
    (avg_d, avg_g)
}

/// Sphere integrals at fixed `q` of `pick([−expm1(X), e^X, 1])`, without the
/// factor `v_ø Φ e^{−q⁰}/4π`.
///
/// The last two are only finite for integrable angular kernels.
fn sphere_integrals<const N: usize>(
    pair: &PairInvariants,
    cfg: &KernelConfig,
    opts: AdaptOpts,
    pick: impl Fn([f64; 3]) -> [f64; N],
) -> Result<[f64; N], QuadError> {
    let half_dp = 0.5 * (pair.p0 - pair.q0);
    let bcoef = 0.5 * pair.cross_norm / pair.s.sqrt();
    let u0 = cfg.delta;
    let mut pts = vec![1.0];
    let mut x = 0.5;
    while x > u0.max(1e-8) {
        pts.push(x);
        x *= 0.25;
    }
    if let Some(uc) = cfg.demo_crossover() {
        pts.push(uc);
    }
    pts.retain(|&v| v > u0);
    pts.push(u0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut segs = Vec::new();
    if u0 == 0.0 && !cfg.is_integrable() {
        // φ-average is O(u), σ₀ ~ u^{−1−γ/2}
        segs.push(Segment::GradedLeft { a: 0.0, b: pts[1], k: grading_power(-0.5 * cfg.gamma) });
        segs.extend(pts[1..].windows(2).map(|w| Segment::Linear { a: w[0], b: w[1] }));
    } else {
        segs.extend(pts.windows(2).map(|w| Segment::Linear { a: w[0], b: w[1] }));
    }
    let r = integrate_segments(
        |u| {
            let sig = sigma0_unchecked(u, cfg);
            if sig == 0.0 {
                return Sample::zero();
            }
            let sin_t = 2.0 * (u * (1.0 - u)).max(0.0).sqrt();
            let (d, g) = phi_averages(-u * half_dp, bcoef * sin_t);
            // sinθ dθ dφ = 2 du dφ
            let w = 2.0 * 2.0 * std::f64::consts::PI * sig;
            Sample::exact(pick([w * d, w * g, w]))
        },
        &segs,
        opts,
    )?;
    Ok(r.value)
}

fn check_direct(cfg: &KernelConfig) -> Result<(), OracleError> {
    cfg.validate()?;
    if cfg.delta == 0.0 && !cfg.is_integrable() && cfg.gamma >= 1.0 {
        return Err(OracleError::Precondition(format!(
            "direct quadrature needs an angular cutoff when gamma >= 1 (gamma = {})",
            cfg.gamma
        )));
    }
    Ok(())
}

fn direct_components<const N: usize>(
    p: &Momentum,
    cfg: &KernelConfig,
    spec: &QuadSpec,
    pick: impl Fn([f64; 3]) -> [f64; N] + Copy,
    decay: QDecay,
) -> Result<[QuadResult; N], OracleError> {
    spec.validate()?;
    let p0 = p.p0();
    let r_max = spec.q_max_override.unwrap_or_else(|| decay.radius(p0, spec.tail_log));
    let iopts = multiplier::inner_opts(spec);
    let (res, warnings) = integrate_q_region_vec(
        |q: &QPoint| {
            let pair = PairInvariants::from_parts(p0, q.q0, q.p_dot_q, q.diff, q.cross);
            if pair.g == 0.0 {
                return Sample::zero();
            }
            let pref = pair.g * pair.s.sqrt() / (p0 * q.q0) * phi_unchecked(pair.g, cfg) * (-q.q0).exp() / FOUR_PI;
            if pref == 0.0 {
                return Sample::zero();
            }
            match sphere_integrals(&pair, cfg, iopts, pick) {
                Ok(v) => Sample::exact(v).scaled(pref),
                Err(_) => Sample { v: [f64::NAN; N], e: [f64::NAN; N] },
            }
        },
        p,
        RegionSpec::full(),
        r_max,
        QRegionOpts::from_spec(spec),
    )?;
    let out: [QuadResult; N] = std::array::from_fn(|k| QuadResult {
        value: res.value[k],
        err_estimate: res.err[k],
        evals: res.evals,
        warnings: warnings.clone(),
    });
    if !res.converged {
        let k = (0..N).max_by(|&a, &b| out[a].err_estimate.total_cmp(&out[b].err_estimate)).unwrap_or(0);
        return Err(QuadError::ToleranceUnreachable { value: out[k].value, err_estimate: out[k].err_estimate, evals: res.evals }.into());
    }
    Ok(out)
}

/// `ζ̃(p) = ∫dq∫dω v_ø σ (√J(q) − √J(q′))√J(q)` by direct quadrature.
pub fn direct_tilde_zeta(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec) -> Result<QuadResult, OracleError> {
    check_direct(cfg)?;
    let [r] = direct_components(p, cfg, spec, |v| [v[0]], QDecay { alpha: 0.0, beta: 0.5 })?;
    Ok(r)
}

/// Direct gain `∫∫ v_ø σ √J(q)√J(q′)` and loss `∫∫ v_ø σ J(q)`.
pub fn direct_gain_loss(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec) -> Result<(QuadResult, QuadResult), OracleError> {
    cfg.validate()?;
    if !cfg.is_integrable() {
        return Err(OracleError::Precondition("gain and loss split needs an integrable angular kernel".into()));
    }
    let [g, l] = direct_components(p, cfg, spec, |v| [v[1], v[2]], QDecay { alpha: 0.0, beta: 0.5 })?;
    Ok((g, l))
}

/// Reduced gain (weight `E₁I₀(jy)`) and loss (weight `E₂I₀(2jy)`), constant 1.
pub fn reduced_gain_loss(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec) -> Result<(QuadResult, QuadResult), OracleError> {
    cfg.validate()?;
    if !cfg.is_integrable() {
        return Err(OracleError::Precondition("gain and loss split needs an integrable angular kernel".into()));
    }
    let (gl, converged) = multiplier::region_integral(p, cfg, RegionSpec::full(), spec, DECAY_REP2, terms_gain_loss, [0.0, 0.0])?;
    if !converged {
        return Err(QuadError::ToleranceUnreachable { value: gl[0].value, err_estimate: gl[0].err_estimate, evals: gl[0].evals }.into());
    }
    let [g, l] = gl;
    Ok((g, l))
}

/// Outcome of [`calibrate_constant`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub constant: f64,
    pub spread: f64,
    pub ratios: Vec<f64>,
}

pub const CALIBRATION_SPREAD_LIMIT: f64 = 5e-3;

/// Mean of `direct / Rep1` over a grid of cutoff kernels and momenta.
pub fn calibrate_constant(cfgs: &[KernelConfig], ps: &[Momentum], spec: &QuadSpec) -> Result<Calibration, OracleError> {
    if cfgs.is_empty() || ps.is_empty() {
        return Err(OracleError::Precondition("empty calibration grid".into()));
    }
    let mut ratios = Vec::with_capacity(cfgs.len() * ps.len());
    for cfg in cfgs {
        if cfg.delta <= 0.0 {
            return Err(OracleError::Precondition("calibration kernels need delta > 0".into()));
        }
        for p in ps {
            let d = direct_tilde_zeta(p, cfg, spec)?;
            let r = multiplier::tilde_zeta(p, cfg, spec, Rep::Rep1)?;
            ratios.push(d.value / r.value);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (hi - lo) / mean.abs();
    if !(spread <= CALIBRATION_SPREAD_LIMIT) {
        return Err(OracleError::CalibrationUnstable { spread, limit: CALIBRATION_SPREAD_LIMIT, ratios });
    }
    Ok(Calibration { constant: mean, spread, ratios })
}

/// Monte Carlo estimate of the direct integral: `q` from the Jüttner
/// density, `ω` uniform on the sphere, paired with its azimuthal reflection.
pub fn direct_tilde_zeta_mc(p: &Momentum, cfg: &KernelConfig, n: usize, seed: u64) -> Result<McResult, OracleError> {
    check_direct(cfg)?;
    if n == 0 {
        return Err(OracleError::Precondition("n must be positive".into()));
    }
    let p0 = p.p0();
    let sampler = JuttnerSampler;
    // the sampler emits q only; the sphere point is drawn from a second stream
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let res = mc_integrate(
        |qv: &[f64; 3]| {
            use rand::Rng;
            let q = Momentum::from_vec(*qv);
            let pair = crate::kinematics::pair_invariants(p, &q);
            if pair.g == 0.0 {
                return 0.0;
            }
            let u: f64 = rng.random();
            let phi: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let sig = sigma0_unchecked(u, cfg);
            if sig == 0.0 {
                return 0.0;
            }
            let alpha = -0.5 * u * (p0 - pair.q0);
            let beta = 0.5 * pair.cross_norm / pair.s.sqrt() * 2.0 * (u * (1.0 - u)).max(0.0).sqrt();
            let c = phi.cos();
            let d = -0.5 * ((alpha + beta * c).exp_m1() + (alpha - beta * c).exp_m1());
            let v = pair.g * pair.s.sqrt() / (p0 * pair.q0) * phi_unchecked(pair.g, cfg);
            // dω density 1/4π cancels the 1/4π of √J√J
            v * sig * d * (-pair.q0).exp()
        },
        &sampler,
        n,
        seed,
    );
    Ok(res)
}

/// Which post-collision loss integral to truncate in `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceForm {
    /// `(1/p⁰)∫dq/q⁰ (e^{−q⁰}/g) ∫₀^R r dr/√(r²+s) s_Λσ`, no decaying weight in `r`.
    Unweighted,
    /// The same with the loss weight `e^{2l(1−√(y²+1))} I₀(2jy)`, `y = r/√s`.
    LossWeighted,
}

/// Partial integrals `I(R)` of the post-collision loss term for each cutoff.
///
/// Each increment `I(R_k) − I(R_{k−1})` is its own quadrature, so the
/// returned sequence is a cumulative sum.
pub fn divergence_demo(
    p: &Momentum,
    cfg: &KernelConfig,
    cutoffs: &[f64],
    form: DivergenceForm,
    spec: &QuadSpec,
) -> Result<Vec<QuadResult>, OracleError> {
    cfg.validate()?;
    if !cfg.is_integrable() {
        return Err(OracleError::Precondition("divergence demo needs a bounded angular kernel".into()));
    }
    if cutoffs.is_empty() || cutoffs[0] <= 0.0 || cutoffs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OracleError::Precondition("cutoffs must be positive and strictly increasing".into()));
    }
    let p0 = p.p0();
    let decay = QDecay { alpha: 0.0, beta: 1.0 };
    let r_max = spec.q_max_override.unwrap_or_else(|| decay.radius(p0, spec.tail_log));
    let iopts = multiplier::inner_opts(spec);
    let mut out: Vec<QuadResult> = Vec::with_capacity(cutoffs.len());
    let mut lo = 0.0;
    let mut acc = QuadResult::new(0.0, 0.0, 0);
    for &hi in cutoffs {
        let (res, warnings) = integrate_q_region_vec(
            |q: &QPoint| {
                let pair = PairInvariants::from_parts(p0, q.q0, q.p_dot_q, q.diff, q.cross);
                if pair.g == 0.0 {
                    return Sample::zero();
                }
                let v = r_integral(&pair, cfg, lo, hi, form, iopts);
                Sample { v: [v.v[0] * (-q.q0).exp() / (p0 * q.q0 * pair.g)], e: [v.e[0] * (-q.q0).exp() / (p0 * q.q0 * pair.g)] }
            },
            p,
            RegionSpec::full(),
            r_max,
            QRegionOpts::from_spec(spec),
        )?;
        acc.value += res.value[0];
        acc.err_estimate += res.err[0];
        acc.evals += res.evals;
        acc.warnings.extend(warnings);
        if !res.converged {
            acc.warnings.push(format!("increment up to R = {hi} did not reach tolerance"));
        }
        acc.warnings.dedup();
        out.push(acc.clone());
        lo = hi;
    }
    Ok(out)
}

/// `∫_{lo}^{hi} r dr/√(r²+s) s_Λσ(g_Λ, θ_Λ) [weight]`.
fn r_integral(pair: &PairInvariants, cfg: &KernelConfig, lo: f64, hi: f64, form: DivergenceForm, opts: AdaptOpts) -> Sample<1> {
    let rs = pair.s.sqrt();
    let mut pts = vec![lo, hi];
    let mut x = rs;
    while x < hi {
        if x > lo {
            pts.push(x);
        }
        x *= 4.0;
    }
    if let Some(uc) = cfg.demo_crossover() {
        // excess where u = u_c
        let ex = uc * pair.g * pair.g / (1.0 - uc);
        let wm1 = 2.0 * ex / pair.s;
        let r = rs * (wm1 * (wm1 + 2.0)).sqrt();
        if r > lo && r < hi {
            pts.push(r);
        }
    }
    if cfg.delta > 0.0 {
        let ex = cfg.delta * pair.g * pair.g / (1.0 - cfg.delta);
        let wm1 = 2.0 * ex / pair.s;
        let r = rs * (wm1 * (wm1 + 2.0)).sqrt();
        if r > lo && r < hi {
            pts.push(r);
        }
    }
    let segs = crate::quadrature::linear_segments(&pts);
    let res = integrate_segments(
        |r| {
            let y = r / rs;
            let wm1 = sqrt1p_m1(y);
            let Some((k, _, _)) = kernel_from_excess(pair, cfg, 0.5 * pair.s * wm1) else { return Sample::zero() };
            let jac = r / (rs * (1.0 + wm1));
            let w = match form {
                DivergenceForm::Unweighted => 1.0,
                DivergenceForm::LossWeighted => (-2.0 * pair.l * wm1 + log_i0_unchecked(2.0 * pair.j * y)).exp(),
            };
            Sample::exact([jac * k * w])
        },
        &segs,
        opts,
    );
    match res {
        Ok(r) => r.as_sample(),
        Err(_) => Sample { v: [f64::NAN], e: [f64::NAN] },
    }
}

/// Reduced `ζ̃` from the first representation, for side-by-side reports.
pub fn reduced_rep1(p: &Momentum, cfg: &KernelConfig, spec: &QuadSpec) -> Result<QuadResult, OracleError> {
    Ok(multiplier::tilde_zeta(p, cfg, spec, Rep::Rep1)?)
}
