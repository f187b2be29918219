//! Adaptive Gauss–Kronrod quadrature, graded endpoint maps, axisymmetric
//! momentum-space integration and a seeded Monte Carlo estimator.
//!
//! The engine is vector valued: an integrand returns `N` components at once
//! together with optional per-component error estimates (used when the
//! integrand is itself a quadrature). All components share the node set and
//! the panel refinement is driven by the worst component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::kinematics::Momentum;

// 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1].
const XK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];
const WK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
// Gauss weights for the odd-indexed Kronrod nodes XK[1], XK[3], ..., XK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerances and budgets shared by every integrator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum bisection depth of a single panel.
    pub max_depth: u32,
    /// Truncate tails where the log-integrand has dropped this far below its peak.
    pub tail_log: f64,
    pub q_max_override: Option<f64>,
    pub seed: u64,
    /// Panel budget per adaptive run.
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self::inner()
    }
}

impl QuadSpec {
    pub fn inner() -> Self {
        QuadSpec {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_depth: 60,
            tail_log: 40.0,
            q_max_override: None,
            seed: 0,
            max_panels: 4000,
        }
    }

    pub fn outer() -> Self {
        QuadSpec { rel_tol: 1e-6, ..Self::inner() }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_depth < 1 || self.max_panels < 1 {
            return Err(QuadError::InvalidSpec);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub err_estimate: f64,
    pub evals: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl QuadResult {
    pub fn new(value: f64, err_estimate: f64, evals: usize) -> Self {
        QuadResult { value, err_estimate, evals, warnings: Vec::new() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("tolerance unreachable: best estimate {value} with error {err_estimate} after {evals} evaluations")]
    ToleranceUnreachable { value: f64, err_estimate: f64, evals: usize },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid quadrature specification")]
    InvalidSpec,
}

/// One integrand sample: values and (for nested quadrature) their errors.
#[derive(Clone, Copy, Debug)]
pub struct Sample<const N: usize> {
    pub v: [f64; N],
    pub e: [f64; N],
}

impl<const N: usize> Sample<N> {
    pub fn exact(v: [f64; N]) -> Self {
        Sample { v, e: [0.0; N] }
    }

    pub fn zero() -> Self {
        Sample { v: [0.0; N], e: [0.0; N] }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for k in 0..N {
            self.v[k] *= c;
            self.e[k] *= c.abs();
        }
        self
    }
}

/// Result of a vector integration; `converged` is false when the budget ran out.
#[derive(Clone, Debug)]
pub struct VecResult<const N: usize> {
    pub value: [f64; N],
    pub err: [f64; N],
    pub evals: usize,
    pub converged: bool,
}

impl<const N: usize> VecResult<N> {
    pub fn as_sample(&self) -> Sample<N> {
        Sample { v: self.value, e: self.err }
    }

    pub fn component(&self, k: usize) -> QuadResult {
        QuadResult::new(self.value[k], self.err[k], self.evals)
    }
}

/// An integration interval together with the variable map used on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Linear { a: f64, b: f64 },
    /// `y = a + (b - a) t^k`, `t ∈ [0, 1]`: clusters nodes at `a`.
    GradedLeft { a: f64, b: f64, k: f64 },
    /// `y = b - (b - a) t^k`: clusters nodes at `b`.
    GradedRight { a: f64, b: f64, k: f64 },
}

impl Segment {
    fn t_range(&self) -> (f64, f64) {
        match *self {
            Segment::Linear { a, b } => (a, b),
            _ => (0.0, 1.0),
        }
    }

    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Segment::Linear { .. } => (t, 1.0),
            Segment::GradedLeft { a, b, k } => {
                let tk1 = t.powf(k - 1.0);
                (a + (b - a) * tk1 * t, (b - a) * k * tk1)
            }
            Segment::GradedRight { a, b, k } => {
                let tk1 = t.powf(k - 1.0);
                (b - (b - a) * tk1 * t, (b - a) * k * tk1)
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Segment::Linear { a, b } | Segment::GradedLeft { a, b, .. } | Segment::GradedRight { a, b, .. } => {
                (a, b)
            }
        }
    }
}

/// Linear segments between consecutive sorted, deduplicated points.
pub fn linear_segments(points: &[f64]) -> Vec<Segment> {
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()));
    pts.windows(2).map(|w| Segment::Linear { a: w[0], b: w[1] }).collect()
}

#[derive(Clone, Debug)]
struct Panel<const N: usize> {
    seg: usize,
    t0: f64,
    t1: f64,
    depth: u32,
    val: [f64; N],
    err: [f64; N],
    abs: [f64; N],
    splittable: bool,
}

#[inline]
fn gk21<const N: usize, F>(f: &mut F, seg: &Segment, t0: f64, t1: f64) -> Result<([f64; N], [f64; N], [f64; N]), QuadError>
where
    F: FnMut(f64) -> Sample<N>,
{
    let c = 0.5 * (t0 + t1);
    let h = 0.5 * (t1 - t0);
    let mut rk = [0.0; N];
    let mut rg = [0.0; N];
    let mut rabs = [0.0; N];
    let mut nested = [0.0; N];
    let mut fv = [[0.0; N]; 21];
    let eval = |t: f64, f: &mut F| -> Result<Sample<N>, QuadError> {
        let (y, jac) = seg.map(t);
        let s = if jac == 0.0 { Sample::zero() } else { f(y).scaled(jac) };
        for k in 0..N {
            if !s.v[k].is_finite() || !s.e[k].is_finite() {
                return Err(QuadError::NonFiniteIntegrand { x: y });
            }
        }
        Ok(s)
    };
    for i in 0..11 {
        let pts: &[f64] = if i == 10 { &[0.0] } else { &[-1.0, 1.0] };
        for (side, sgn) in pts.iter().enumerate() {
            let t = if i == 10 { c } else { c + sgn * h * XK[i] };
            let s = eval(t, f)?;
            let idx = if i == 10 { 20 } else { 2 * i + side };
            fv[idx] = s.v;
            for k in 0..N {
                rk[k] += WK[i] * s.v[k];
                rabs[k] += WK[i] * s.v[k].abs();
                nested[k] += WK[i] * s.e[k];
                if i % 2 == 1 {
                    rg[k] += WG[i / 2] * s.v[k];
                }
            }
        }
    }
    let mut val = [0.0; N];
    let mut err = [0.0; N];
    let mut abs = [0.0; N];
    for k in 0..N {
        let mean = 0.5 * rk[k];
        let mut asc = WK[10] * (fv[20][k] - mean).abs();
        for i in 0..10 {
            asc += WK[i] * ((fv[2 * i][k] - mean).abs() + (fv[2 * i + 1][k] - mean).abs());
        }
        asc *= h.abs();
        let raw = ((rk[k] - rg[k]) * h).abs();
        let mut e = raw;
        if asc != 0.0 && raw != 0.0 {
            e = asc * (200.0 * raw / asc).powf(1.5).min(1.0);
        }
        let resabs = rabs[k] * h.abs();
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            e = e.max(50.0 * f64::EPSILON * resabs);
        }
        val[k] = rk[k] * h;
        err[k] = e + nested[k] * h.abs();
        abs[k] = resabs;
    }
    Ok((val, err, abs))
}

/// Relative and absolute tolerance for one adaptive run.
#[derive(Clone, Copy, Debug)]
pub struct AdaptOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl From<&QuadSpec> for AdaptOpts {
    fn from(s: &QuadSpec) -> Self {
        AdaptOpts { rel_tol: s.rel_tol, abs_tol: s.abs_tol, max_depth: s.max_depth, max_panels: s.max_panels }
    }
}

impl AdaptOpts {
    pub fn rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Globally adaptive GK21 over a list of segments.
///
/// A component has converged when its total error is below
/// `max(abs_tol, rel_tol · ∫|f_k|)`. Panels are refined worst-first, where
/// "worst" is the largest error relative to its component's tolerance.
pub fn integrate_segments<const N: usize, F>(mut f: F, segments: &[Segment], opts: AdaptOpts) -> Result<VecResult<N>, QuadError>
where
    F: FnMut(f64) -> Sample<N>,
{
    let mut panels: Vec<Panel<N>> = Vec::with_capacity(64);
    let mut evals = 0usize;
    for (si, seg) in segments.iter().enumerate() {
        let (t0, t1) = seg.t_range();
        if !(t1 > t0) {
            continue;
        }
        let (val, err, abs) = gk21(&mut f, seg, t0, t1)?;
        evals += 21;
        panels.push(Panel { seg: si, t0, t1, depth: 0, val, err, abs, splittable: true });
    }
    let mut converged = false;
    loop {
        let mut tot_abs = [0.0; N];
        let mut tot_err = [0.0; N];
        let mut tot_val = [0.0; N];
        for p in &panels {
            for k in 0..N {
                tot_abs[k] += p.abs[k];
                tot_err[k] += p.err[k];
                tot_val[k] += p.val[k];
            }
        }
        let mut tol = [0.0; N];
        let mut done = true;
        for k in 0..N {
            tol[k] = opts.abs_tol.max(opts.rel_tol * tot_abs[k].max(tot_val[k].abs()));
            if tot_err[k] > tol[k] {
                done = false;
            }
        }
        if done {
            converged = true;
            break;
        }
        if panels.len() >= opts.max_panels {
            break;
        }
        let mut worst = None;
        let mut worst_score = 0.0;
        for (i, p) in panels.iter().enumerate() {
            if !p.splittable {
                continue;
            }
            let mut score = 0.0f64;
            for k in 0..N {
                score = score.max(p.err[k] / tol[k]);
            }
            if score > worst_score {
                worst_score = score;
                worst = Some(i);
            }
        }
        let Some(wi) = worst else { break };
        let p = panels[wi].clone();
        let mid = 0.5 * (p.t0 + p.t1);
        if p.depth >= opts.max_depth || !(mid > p.t0 && mid < p.t1) || (p.t1 - p.t0) <= 1e-13 * p.t0.abs().max(p.t1.abs()) {
            panels[wi].splittable = false;
            continue;
        }
        let seg = &segments[p.seg];
        let (v1, e1, a1) = gk21(&mut f, seg, p.t0, mid)?;
        let (v2, e2, a2) = gk21(&mut f, seg, mid, p.t1)?;
        evals += 42;
        panels[wi] = Panel { seg: p.seg, t0: p.t0, t1: mid, depth: p.depth + 1, val: v1, err: e1, abs: a1, splittable: true };
        panels.push(Panel { seg: p.seg, t0: mid, t1: p.t1, depth: p.depth + 1, val: v2, err: e2, abs: a2, splittable: true });
    }
    panels.sort_by(|a, b| a.seg.cmp(&b.seg).then(a.t0.partial_cmp(&b.t0).unwrap()));
    let mut value = [0.0; N];
    let mut err = [0.0; N];
    let mut buf = Vec::with_capacity(panels.len());
    for k in 0..N {
        buf.clear();
        buf.extend(panels.iter().map(|p| p.val[k]));
        value[k] = pairwise_sum(&buf);
        buf.clear();
        buf.extend(panels.iter().map(|p| p.err[k]));
        err[k] = pairwise_sum(&buf);
    }
    Ok(VecResult { value, err, evals, converged })
}

fn finish(r: VecResult<1>) -> Result<QuadResult, QuadError> {
    if r.converged {
        Ok(QuadResult::new(r.value[0], r.err[0], r.evals))
    } else {
        Err(QuadError::ToleranceUnreachable { value: r.value[0], err_estimate: r.err[0], evals: r.evals })
    }
}

/// Scalar adaptive quadrature on `[a, b]`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let r = integrate_segments(|x| Sample::exact([f(x)]), &[Segment::Linear { a, b }], spec.into())?;
    finish(r)
}

/// Grading power that turns `y^α dy` near an endpoint into a smooth `t dt`.
pub fn grading_power(singular_exponent: f64) -> f64 {
    (2.0 / (1.0 + singular_exponent)).max(1.0)
}

/// Adaptive quadrature on `[a, b]` for `f(y) ~ (y - a)^α` at the left end.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    singular_exponent: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    if !(a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let k = grading_power(singular_exponent);
    let r = integrate_segments(|x| Sample::exact([f(x)]), &[Segment::GradedLeft { a, b, k }], spec.into())?;
    finish(r)
}

/// `∫₀^∞ f` for `f(y) ~ y^α` at 0 and `~ e^{-rate·y}` at infinity.
pub fn integrate_singular_semiinf<F: FnMut(f64) -> f64>(
    mut f: F,
    singular_exponent: f64,
    decay_rate: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    if !(singular_exponent > -1.0 && singular_exponent <= 1.0) || !(decay_rate > 0.0) {
        return Err(QuadError::InvalidSpec);
    }
    let scale = 1.0 / decay_rate;
    let y1 = scale.min(1.0);
    let mut ymax = spec.tail_log / decay_rate;
    // extend until the last sample is negligible against the peak seen so far
    let mut peak = 0.0f64;
    let mut y = y1;
    while y < ymax {
        peak = peak.max(f(y).abs());
        y *= 1.5;
    }
    while f(ymax).abs() > peak * (-spec.tail_log).exp() && ymax < 1e6 * scale {
        ymax *= 1.5;
    }
    let mut segs = vec![Segment::GradedLeft { a: 0.0, b: y1, k: grading_power(singular_exponent) }];
    let mut pts = vec![y1];
    let mut x = y1;
    while x * 4.0 < ymax {
        x *= 4.0;
        pts.push(x);
    }
    pts.push(ymax);
    segs.extend(linear_segments(&pts));
    let r = integrate_segments(|x| Sample::exact([f(x)]), &segs, spec.into())?;
    finish(r)
}

/// Part of momentum space used in a `dq` integral; the threshold is `½|p|^{1/m}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RegionKind {
    Full,
    SmallQ,
    LargeQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub m: f64,
}

impl RegionSpec {
    pub fn full() -> Self {
        RegionSpec { kind: RegionKind::Full, m: 2.0 }
    }
    pub fn small(m: f64) -> Self {
        RegionSpec { kind: RegionKind::SmallQ, m }
    }
    pub fn large(m: f64) -> Self {
        RegionSpec { kind: RegionKind::LargeQ, m }
    }

    pub fn threshold(&self, p_norm: f64) -> f64 {
        0.5 * p_norm.powf(1.0 / self.m)
    }
}

/// A point `q` described relative to `p = (0, 0, |p|)`.
///
/// All scalars the integrands need are carried explicitly so that
/// `|p - q|` and `|p × q|` stay accurate when `q → p`.
#[derive(Clone, Copy, Debug)]
pub struct QPoint {
    pub r: f64,
    pub mu: f64,
    pub q0: f64,
    pub p_dot_q: f64,
    pub diff: f64,
    pub cross: f64,
}

impl QPoint {
    pub fn polar(p_norm: f64, r: f64, mu: f64) -> Self {
        let mu = mu.clamp(-1.0, 1.0);
        let d2 = (p_norm - r).powi(2) + 2.0 * p_norm * r * (1.0 - mu);
        QPoint {
            r,
            mu,
            q0: (1.0 + r * r).sqrt(),
            p_dot_q: p_norm * r * mu,
            diff: d2.max(0.0).sqrt(),
            cross: p_norm * r * ((1.0 - mu) * (1.0 + mu)).max(0.0).sqrt(),
        }
    }

    /// `r = |q|`, `d = |q - p|`.
    pub fn bipolar(p_norm: f64, r: f64, d: f64) -> Self {
        let h = (p_norm + r + d) * (r + d - p_norm) * (p_norm - r + d) * (p_norm + r - d);
        let cross = 0.5 * h.max(0.0).sqrt();
        let p_dot_q = 0.5 * ((p_norm - d) * (p_norm + d) + r * r);
        let mu = if r > 0.0 && p_norm > 0.0 { (p_dot_q / (p_norm * r)).clamp(-1.0, 1.0) } else { 1.0 };
        QPoint { r, mu, q0: (1.0 + r * r).sqrt(), p_dot_q, diff: d, cross }
    }

    /// The explicit vector `q` in the frame where `p` lies on the z axis.
    pub fn vector(&self) -> [f64; 3] {
        let s = (self.cross / self.r.max(f64::MIN_POSITIVE)).max(0.0);
        [if self.r > 0.0 { s } else { 0.0 }, 0.0, self.r * self.mu]
    }
}

/// Exponential envelope `exp(α p⁰ − β q⁰)` bounding an integrand's decay in `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QDecay {
    pub alpha: f64,
    pub beta: f64,
}

impl QDecay {
    pub fn radius(&self, p0: f64, tail_log: f64) -> f64 {
        let q0 = ((self.alpha * p0 + tail_log) / self.beta).max(1.0 + tail_log / self.beta);
        (q0 * q0 - 1.0).sqrt()
    }
}

/// Tolerances for the two momentum-space levels.
#[derive(Clone, Copy, Debug)]
pub struct QRegionOpts {
    pub outer: AdaptOpts,
    pub inner: AdaptOpts,
}

impl QRegionOpts {
    pub fn from_spec(spec: &QuadSpec) -> Self {
        let outer = AdaptOpts::from(spec);
        QRegionOpts { outer, inner: outer.rel(spec.rel_tol * 0.25) }
    }
}

/// `2π ∫∫ F r² dr dμ` over a region, with `F` axisymmetric about `p`.
///
/// When `p` itself lies in the truncated domain the integral is taken in
/// bipolar coordinates `(d, r) = (|q−p|, |q|)`, whose measure `2π r d/|p|`
/// absorbs the `1/|q−p|` behaviour at `q = p`.
pub fn integrate_q_region_vec<const N: usize, F>(
    mut f: F,
    p: &Momentum,
    region: RegionSpec,
    r_max: f64,
    opts: QRegionOpts,
) -> Result<(VecResult<N>, Vec<String>), QuadError>
where
    F: FnMut(&QPoint) -> Sample<N>,
{
    let pn = p.norm();
    let mut warnings = Vec::new();
    let thr = if region.kind == RegionKind::Full { 0.0 } else { region.threshold(pn) };
    let (r_lo, r_hi) = match region.kind {
        RegionKind::Full => (0.0, r_max),
        RegionKind::SmallQ => (0.0, thr.min(r_max)),
        RegionKind::LargeQ => (thr, r_max),
    };
    if region.kind != RegionKind::Full && thr < 1e-12 {
        warnings.push(format!("region threshold {thr:e} is below the numeric floor"));
    }
    if !(r_hi > r_lo) {
        return Ok((VecResult { value: [0.0; N], err: [0.0; N], evals: 0, converged: true }, warnings));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let bipolar = pn > 1e-300 && pn >= r_lo && pn < r_hi;
    let mut evals = 0usize;
    let res = if !bipolar {
        let mut pts = vec![r_lo, r_hi];
        let mut x = 1.0;
        while x < r_hi {
            if x > r_lo {
                pts.push(x);
            }
            x *= 4.0;
        }
        if pn > r_lo && pn < r_hi {
            pts.push(pn);
        }
        let segs = linear_segments(&pts);
        integrate_segments(
            |r| {
                let inner = integrate_segments(
                    |mu| f(&QPoint::polar(pn, r, mu)),
                    &[Segment::Linear { a: -1.0, b: 1.0 }],
                    opts.inner,
                );
                match inner {
                    Ok(res) => {
                        evals += res.evals;
                        res.as_sample().scaled(two_pi * r * r)
                    }
                    Err(_) => Sample { v: [f64::NAN; N], e: [f64::NAN; N] },
                }
            },
            &segs,
            opts.outer,
        )?
    } else {
        let d_max = pn + r_hi;
        let mut pts = vec![0.0, d_max];
        for b in [pn - r_lo, pn + r_lo, r_hi - pn] {
            if b > 0.0 && b < d_max {
                pts.push(b);
            }
        }
        let d1 = pn.min(1.0);
        for k in 1..=4 {
            pts.push(d1 * 10f64.powi(-k));
        }
        let mut x = 1.0;
        while x < d_max {
            pts.push(x);
            x *= 4.0;
        }
        let segs = linear_segments(&pts);
        integrate_segments(
            |d| {
                let lo = (pn - d).abs().max(r_lo);
                let hi = (pn + d).min(r_hi);
                if !(hi > lo) {
                    return Sample::zero();
                }
                let mut rp = vec![lo, hi];
                let mut x = 1.0;
                while x < hi {
                    if x > lo {
                        rp.push(x);
                    }
                    x *= 4.0;
                }
                let inner = integrate_segments(
                    |r| f(&QPoint::bipolar(pn, r, d)).scaled(r),
                    &linear_segments(&rp),
                    opts.inner,
                );
                match inner {
                    Ok(res) => {
                        evals += res.evals;
                        res.as_sample().scaled(two_pi * d / pn)
                    }
                    Err(_) => Sample { v: [f64::NAN; N], e: [f64::NAN; N] },
                }
            },
            &segs,
            opts.outer,
        )?
    };
    Ok((VecResult { evals: evals + res.evals, ..res }, warnings))
}

/// Scalar form of [`integrate_q_region_vec`] taking `F(|q|, μ)`.
pub fn integrate_q_region<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    p: &Momentum,
    region: RegionSpec,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    let r_max = spec.q_max_override.unwrap_or_else(|| QDecay { alpha: 0.0, beta: 1.0 }.radius(p.p0(), spec.tail_log));
    let (r, warnings) =
        integrate_q_region_vec(|q: &QPoint| Sample::exact([f(q.r, q.mu)]), p, region, r_max, QRegionOpts::from_spec(spec))?;
    let mut out = finish(r)?;
    out.warnings = warnings;
    Ok(out)
}

/// A proposal distribution for [`mc_integrate`].
pub trait Sampler {
    type Point;
    /// Draw a point and return it with its density.
    fn sample<R: Rng>(&self, rng: &mut R) -> (Self::Point, f64);
}

/// `∫ e^{−q⁰} dq = 4π K₂(1)` over ℝ³.
pub const JUTTNER_MASS: f64 = 4.0 * std::f64::consts::PI * 1.624_838_898_635_177_4;

/// Momenta with density `e^{−q⁰} / JUTTNER_MASS`.
#[derive(Clone, Copy, Debug, Default)]
pub struct JuttnerSampler;

impl Sampler for JuttnerSampler {
    type Point = [f64; 3];

    fn sample<R: Rng>(&self, rng: &mut R) -> ([f64; 3], f64) {
        // r from Gamma(3,1), thinned by e^{r − √(1+r²)} ≤ 1
        let r = loop {
            let u: f64 = rng.random::<f64>() * rng.random::<f64>() * rng.random::<f64>();
            let r = -(u.max(f64::MIN_POSITIVE)).ln();
            let acc = (r - (1.0 + r * r).sqrt()).exp();
            if rng.random::<f64>() < acc {
                break r;
            }
        };
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let s = (1.0 - z * z).max(0.0).sqrt();
        let q = [r * s * phi.cos(), r * s * phi.sin(), r * z];
        let dens = (-(1.0 + r * r).sqrt()).exp() / JUTTNER_MASS;
        (q, dens)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Importance-sampled `∫ F` with a ChaCha stream seeded from `seed`.
pub fn mc_integrate<S, F>(mut f: F, sampler: &S, n: usize, seed: u64) -> McResult
where
    S: Sampler,
    F: FnMut(&S::Point) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let (x, dens) = sampler.sample(&mut rng);
        let w = f(&x) / dens;
        let delta = w - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (w - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McResult { value: mean, stderr: (var / n.max(1) as f64).sqrt(), n }
}
