//! Seeded invariant suites behind `verify-identities`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relzeta::kernels::{phi, sigma0, sigma0_tail_integral};
use relzeta::kinematics::{
    add, claim_gg_residual, com_frame, cross, dot, norm, pair_invariants, post_collision, relative_momentum, sub, Vec3,
};
use relzeta::quadrature::{integrate_adaptive, integrate_graded, integrate_singular_semiinf};
use relzeta::specfun::{j2_closed, k2tilde_closed, kbar_gamma_num, log_i0, log_i0_unchecked};
use relzeta::{KernelConfig, Momentum, QuadSpec};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub cases: usize,
    /// Largest violation measure seen; passes when `<= tol`.
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

struct Acc {
    suite: &'static str,
    name: &'static str,
    cases: usize,
    worst: f64,
    tol: f64,
}

impl Acc {
    fn new(suite: &'static str, name: &'static str, tol: f64) -> Self {
        Acc { suite, name, cases: 0, worst: 0.0, tol }
    }

    fn push(&mut self, x: f64) {
        self.cases += 1;
        // NaN counts as a failure
        if !(x <= self.worst) {
            self.worst = if x.is_nan() { f64::INFINITY } else { x };
        }
    }

    fn done(self) -> Check {
        Check { suite: self.suite, name: self.name, cases: self.cases, worst: self.worst, tol: self.tol, pass: self.worst <= self.tol }
    }
}

fn ball(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    loop {
        let v = [rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r)];
        if norm(&v) <= r {
            return v;
        }
    }
}

fn sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    let c: f64 = rng.random_range(-1.0..1.0);
    let ph: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - c * c).sqrt();
    [s * ph.cos(), s * ph.sin(), c]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn kinematics(n: usize, seed: u64, max_p: f64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s_id = Acc::new("kinematics", "s = g^2 + 4", 1e-12);
    let mut g_up = Acc::new("kinematics", "g <= |p-q|", 1e-12);
    let mut g_lo = Acc::new("kinematics", "sqrt(|p-q|^2+|pxq|^2)/sqrt(p0 q0) <= g", 1e-12);
    let mut e_diff = Acc::new("kinematics", "|p0-q0| <= |p-q|", 1e-12);
    let mut s_up = Acc::new("kinematics", "s <= 4 p0 q0", 1e-12);
    let mut jl = Acc::new("kinematics", "j <= l", 1e-12);
    let mut l2j2 = Acc::new("kinematics", "l^2 - j^2 = s|p-q|^2/(16 g^2)", 1e-10);
    let mut cons = Acc::new("kinematics", "post-collision conservation", 1e-12);
    let mut gg = Acc::new("kinematics", "claim (gg) residual / s", 1e-10);
    for _ in 0..n {
        let p = Momentum::from_vec(ball(&mut rng, max_p));
        let q = Momentum::from_vec(ball(&mut rng, max_p));
        let omega = sphere(&mut rng);
        let (pv, qv) = (p.vec(), q.vec());
        let d = norm(&sub(&pv, &qv));
        let c = norm(&cross(&pv, &qv));
        let inv = pair_invariants(&p, &q);
        let g = relative_momentum(&p, &q);
        let e = p.p0() + q.p0();
        let tot = add(&pv, &qv);
        let s_direct = e * e - dot(&tot, &tot);
        s_id.push(rel(s_direct, g * g + 4.0));
        let slack = |lhs: f64, rhs: f64| (lhs - rhs).max(0.0) / rhs.max(1.0);
        g_up.push(slack(g, d));
        g_lo.push(slack((d * d + c * c).sqrt() / (p.p0() * q.p0()).sqrt(), g));
        e_diff.push(slack((p.p0() - q.p0()).abs(), d));
        s_up.push(slack(inv.s, 4.0 * p.p0() * q.p0()));
        jl.push(slack(inv.j, inv.l));
        if g >= 1e-6 {
            l2j2.push(rel((inv.l - inv.j) * (inv.l + inv.j), inv.s * d * d / (16.0 * g * g)));
        }
        let (pp, qp) = post_collision(&p, &q, &omega);
        let (a, b) = (p.four(), q.four());
        let (x, y) = (pp.four(), qp.four());
        let viol = (0..4).map(|k| ((x[k] + y[k]) - (a[k] + b[k])).abs()).fold(0.0, f64::max);
        cons.push(viol / e);
        gg.push(claim_gg_residual(&p, &q, &pp, &qp).abs() / inv.s);
    }
    [s_id, g_up, g_lo, e_diff, s_up, jl, l2j2, cons, gg].into_iter().map(Acc::done).collect()
}

pub fn lorentz(n: usize, seed: u64, max_p: f64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut metric = Acc::new("lorentz", "L^T eta L = eta", 1e-10);
    let mut total = Acc::new("lorentz", "L(p+q) = (sqrt s,0,0,0)", 1e-10);
    let mut diff = Acc::new("lorentz", "-L(p-q) = (0,0,0,g)", 1e-10);
    let eta = [-1.0, 1.0, 1.0, 1.0];
    while metric.cases < n {
        let p = Momentum::from_vec(ball(&mut rng, max_p));
        let q = Momentum::from_vec(ball(&mut rng, max_p));
        if norm(&cross(&p.vec(), &q.vec())) < 1e-6 * p.p0() * q.p0() {
            continue;
        }
        let Ok(fr) = com_frame(&p, &q) else {
            metric.push(f64::INFINITY);
            continue;
        };
        let inv = pair_invariants(&p, &q);
        let m = fr.metric_check();
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { eta[a] } else { 0.0 };
                worst = worst.max((m[a][b] - want).abs());
            }
        }
        metric.push(worst);
        let (a, b) = (p.four(), q.four());
        let scale = (a[0] + b[0]).max(1.0);
        let t = fr.apply(&[a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
        let want_t = [inv.s.sqrt(), 0.0, 0.0, 0.0];
        total.push((0..4).map(|k| (t[k] - want_t[k]).abs()).fold(0.0, f64::max) / scale);
        let dd = fr.apply(&[a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]);
        let want_d = [0.0, 0.0, 0.0, inv.g];
        diff.push((0..4).map(|k| (-dd[k] - want_d[k]).abs()).fold(0.0, f64::max) / scale);
    }
    [metric, total, diff].into_iter().map(Acc::done).collect()
}

fn tight() -> QuadSpec {
    QuadSpec::inner().with_rel_tol(1e-12)
}

/// `ln I₀(x)` by quadrature of `(1/π)∫₀^π e^{x cos θ} dθ`.
fn log_i0_quadrature(x: f64) -> f64 {
    let r = integrate_adaptive(|t| (x * (t.cos() - 1.0)).exp(), 0.0, std::f64::consts::PI, &tight()).expect("bessel quadrature");
    x + (r.value / std::f64::consts::PI).ln()
}

fn semiinf(f: impl FnMut(f64) -> f64, rate: f64) -> f64 {
    integrate_singular_semiinf(f, 1.0, rate, &QuadSpec { tail_log: 60.0, ..tight() }).map(|r| r.value).unwrap_or(f64::NAN)
}

fn lj_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(100);
    for i in 0..10 {
        let l = 1.0 + 49.0 * i as f64 / 9.0;
        for k in 0..10 {
            out.push((l, l * 0.95 * k as f64 / 9.0));
        }
    }
    out
}

pub fn specfun(n: usize, seed: u64) -> Vec<Check> {
    let mut li0 = Acc::new("specfun", "log_i0 vs integral definition", 1e-10);
    for k in 0..=60 {
        let x = 0.5 * k as f64;
        let a = log_i0(x).unwrap_or(f64::NAN);
        li0.push((a - log_i0_quadrature(x)).exp_m1().abs());
    }
    let mut j2 = Acc::new("specfun", "j2_closed vs quadrature", 1e-8);
    let mut k2 = Acc::new("specfun", "k2tilde_closed vs quadrature", 1e-6);
    let mut kb = Acc::new("specfun", "kbar_gamma <= 10 exp(-sqrt(l^2-j^2))", 0.0);
    let mut grid = lj_grid();
    grid.extend([1.0, 5.0, 20.0].map(|l| (l, 0.9 * l)));
    for &(l, j) in &grid {
        // both integrands carry e^{-l}; factor it out to keep magnitudes O(1)
        let w = ((l - j) * (l + j)).sqrt();
        let e = |y: f64| (-l * (y * y / ((y * y + 1.0).sqrt() + 1.0)) + log_i0_unchecked(j * y)).exp();
        let q2 = semiinf(|y| y / (y * y + 1.0).sqrt() * e(y), l - j) * (-l).exp();
        let qk = semiinf(|y| y * (y * y + 1.0).sqrt() * e(y), l - j) * (-l).exp();
        j2.push(j2_closed(l, j).map(|v| rel(v, q2)).unwrap_or(f64::NAN));
        k2.push(k2tilde_closed(l, j).map(|v| rel(v, qk)).unwrap_or(f64::NAN));
        for gamma in [0.5, 1.5] {
            let v = kbar_gamma_num(l, j, gamma).unwrap_or(f64::NAN);
            kb.push(v - 10.0 * (-w).exp());
        }
    }
    let mut mb = Acc::new("specfun", "max over [0,1] of exp(-l sqrt(x^2+1) + j x) <= 3 exp(-sqrt(l^2-j^2))", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    for _ in 0..n.min(1000) {
        let l: f64 = rng.random_range(0.5..50.0);
        let j: f64 = l * rng.random::<f64>();
        let w = ((l - j) * (l + j)).sqrt();
        let mx = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                -l * (x * x + 1.0).sqrt() + j * x
            })
            .fold(f64::NEG_INFINITY, f64::max);
        // compare logarithms so large l does not underflow
        mb.push(mx - (3f64.ln() - w));
    }
    [li0, j2, k2, kb, mb].into_iter().map(Acc::done).collect()
}

pub fn kernels(n: usize, seed: u64) -> Vec<Check> {
    let cfgs = [
        KernelConfig::hard(1.0, 0.5).unwrap(),
        KernelConfig::soft(1.5, 1.2).unwrap(),
        KernelConfig::demo(0.0, 1.0, 1.0).unwrap(),
        KernelConfig::hard(1.0, 0.5).unwrap().with_delta(0.1).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut pos = Acc::new("kernels", "sigma0 >= 0 and Phi > 0", 0.0);
    for _ in 0..n.min(1000) {
        let u: f64 = rng.random_range(1e-9..1.0);
        let g: f64 = rng.random_range(1e-6..100.0);
        for cfg in &cfgs {
            let sg = sigma0(u, cfg).unwrap_or(f64::NAN);
            let ph = phi(g, cfg).unwrap_or(f64::NAN);
            pos.push(if sg >= 0.0 && ph > 0.0 { 0.0 } else { 1.0 });
        }
    }
    let mut tail = Acc::new("kernels", "sigma0 tail integral vs quadrature", 1e-9);
    for cfg in &cfgs {
        for u0 in [1e-3f64, 0.05, 0.2, 0.7] {
            let lo = u0.max(cfg.delta);
            let mut pts = vec![lo, 1.0];
            if let Some(uc) = cfg.demo_crossover() {
                if uc > lo {
                    pts.insert(1, uc);
                }
            }
            let q: f64 = pts
                .windows(2)
                .map(|w| integrate_graded(|u| sigma0(u, cfg).unwrap_or(f64::NAN), w[0], w[1], 0.0, &tight()).map(|r| r.value).unwrap_or(f64::NAN))
                .sum();
            tail.push(rel(sigma0_tail_integral(u0, cfg), q));
        }
    }
    let mut cut = Acc::new("kernels", "sigma0 vanishes below the cutoff", 0.0);
    let c = cfgs[3];
    for k in 1..100 {
        let u = c.delta * k as f64 / 100.0;
        cut.push(sigma0(u, &c).unwrap_or(f64::NAN).abs());
    }
    [pos, tail, cut].into_iter().map(Acc::done).collect()
}

pub fn all(n: usize, seed: u64, max_p: f64) -> Vec<Check> {
    let mut out = kinematics(n, seed, max_p);
    out.extend(lorentz(n.min(1000), seed, max_p));
    out.extend(specfun(n, seed));
    out.extend(kernels(n, seed));
    out
}
