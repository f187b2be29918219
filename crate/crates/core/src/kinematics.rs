//! Pair kinematics for unit-mass particles with c = 1.
//!
//! Four-vectors use the signature (−, +, +, +); the Minkowski product of
//! `(a⁰, a)` and `(b⁰, b)` is `−a⁰b⁰ + a·b`.

use serde::Serialize;
use thiserror::Error;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(c: f64, a: &Vec3) -> Vec3 {
    [c * a[0], c * a[1], c * a[2]]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("degenerate pair: g = 0 (p = q)")]
    DegeneratePair,
}

/// Energy `√(1 + |p|²)`.
pub fn energy(p: &Vec3) -> f64 {
    // hypot keeps full precision for tiny and huge |p|
    let n = norm(p);
    1f64.hypot(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Momentum {
    px: f64,
    py: f64,
    pz: f64,
    p0: f64,
}

impl Momentum {
    pub fn new(px: f64, py: f64, pz: f64) -> Self {
        Momentum { px, py, pz, p0: energy(&[px, py, pz]) }
    }

    pub fn from_vec(v: Vec3) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Momentum of energy `p0` along the unit vector `dir`.
    pub fn with_energy(p0: f64, dir: Vec3) -> Self {
        let n = norm(&dir);
        let r = ((p0 - 1.0) * (p0 + 1.0)).max(0.0).sqrt();
        let mut m = Self::from_vec(scale(r / n, &dir));
        m.p0 = p0;
        m
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn px(&self) -> f64 {
        self.px
    }

    pub fn py(&self) -> f64 {
        self.py
    }

    pub fn pz(&self) -> f64 {
        self.pz
    }

    pub fn vec(&self) -> Vec3 {
        [self.px, self.py, self.pz]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec())
    }

    /// Contravariant components `(p⁰, p)`.
    pub fn four(&self) -> [f64; 4] {
        [self.p0, self.px, self.py, self.pz]
    }
}

/// Minkowski product with signature (−, +, +, +).
#[inline]
pub fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Relative momentum via `√(2(|p−q|² + |p×q|²)/(p⁰q⁰ + p·q + 1))`.
pub fn relative_momentum(p: &Momentum, q: &Momentum) -> f64 {
    let (pv, qv) = (p.vec(), q.vec());
    let d = sub(&pv, &qv);
    let c = cross(&pv, &qv);
    g_from_parts(p.p0(), q.p0(), dot(&pv, &qv), dot(&d, &d), dot(&c, &c))
}

#[inline]
fn g_from_parts(p0: f64, q0: f64, pq: f64, diff2: f64, cross2: f64) -> f64 {
    (2.0 * (diff2 + cross2) / (p0 * q0 + pq + 1.0)).sqrt()
}

/// Every Lorentz scalar of a pair that the reduced integrals use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairInvariants {
    pub s: f64,
    pub g: f64,
    pub l: f64,
    pub j: f64,
    pub cross_norm: f64,
    pub diff_norm: f64,
    pub sqrt_l2_minus_j2: f64,
    pub p0: f64,
    pub q0: f64,
}

impl PairInvariants {
    /// Build from `p⁰, q⁰, p·q, |p−q|, |p×q|`.
    pub fn from_parts(p0: f64, q0: f64, p_dot_q: f64, diff_norm: f64, cross_norm: f64) -> Self {
        let g = g_from_parts(p0, q0, p_dot_q, diff_norm * diff_norm, cross_norm * cross_norm);
        let s = g * g + 4.0;
        let l = 0.25 * (p0 + q0);
        let (j, w) = if g > 0.0 {
            (cross_norm / (2.0 * g), diff_norm * s.sqrt() / (4.0 * g))
        } else {
            (0.0, 0.5)
        };
        PairInvariants { s, g, l, j, cross_norm, diff_norm, sqrt_l2_minus_j2: w, p0, q0 }
    }

    pub fn is_degenerate(&self) -> bool {
        self.g == 0.0
    }
}

pub fn pair_invariants(p: &Momentum, q: &Momentum) -> PairInvariants {
    let (pv, qv) = (p.vec(), q.vec());
    PairInvariants::from_parts(p.p0(), q.p0(), dot(&pv, &qv), norm(&sub(&pv, &qv)), norm(&cross(&pv, &qv)))
}

/// Outgoing momenta for the center-of-momentum direction `omega`.
pub fn post_collision(p: &Momentum, q: &Momentum, omega: &Vec3) -> (Momentum, Momentum) {
    let inv = pair_invariants(p, q);
    let tot = add(&p.vec(), &q.vec());
    let e = p.p0() + q.p0();
    let rs = inv.s.sqrt();
    // (ξ − 1)/|p+q|² written without the division by |p+q|²
    let c = 1.0 / (rs * (e + rs));
    let w = dot(&tot, omega);
    let half_g = 0.5 * inv.g;
    let k: Vec3 = [
        half_g * (omega[0] + c * w * tot[0]),
        half_g * (omega[1] + c * w * tot[1]),
        half_g * (omega[2] + c * w * tot[2]),
    ];
    let mid = scale(0.5, &tot);
    let pp = Momentum::from_vec(add(&mid, &k));
    let qp = Momentum::from_vec(sub(&mid, &k));
    (pp, qp)
}

/// The direction `ω₀` with `post_collision(p, q, ω₀) = (p, q)`.
pub fn forward_direction(p: &Momentum, q: &Momentum) -> Result<Vec3, KinematicsError> {
    let inv = pair_invariants(p, q);
    if inv.is_degenerate() {
        return Err(KinematicsError::DegeneratePair);
    }
    let (pv, qv) = (p.vec(), q.vec());
    let tot = add(&pv, &qv);
    let c = (p.p0() - q.p0()) / (p.p0() + q.p0() + inv.s.sqrt());
    let d = sub(&pv, &qv);
    Ok([(d[0] - c * tot[0]) / inv.g, (d[1] - c * tot[1]) / inv.g, (d[2] - c * tot[2]) / inv.g])
}

/// `√(2(|a−b|² + |a×b|²)/(a⁰b⁰ + a·b + 1))` for two momenta.
fn gbar(a: &Momentum, b: &Momentum) -> f64 {
    relative_momentum(a, b)
}

/// `cos θ = 1 − 2ḡ²/g²` with `ḡ = g(p, p′)`.
pub fn scattering_cos(p: &Momentum, q: &Momentum, p_prime: &Momentum) -> Result<f64, KinematicsError> {
    let g = relative_momentum(p, q);
    if g == 0.0 {
        return Err(KinematicsError::DegeneratePair);
    }
    let gb = gbar(p, p_prime);
    let c = 1.0 - 2.0 * (gb / g).powi(2);
    let c = if c > 1.0 && c <= 1.0 + 1e-12 {
        1.0
    } else if (-1.0 - 1e-12..-1.0).contains(&c) {
        -1.0
    } else {
        c
    };
    Ok(c)
}

/// Møller velocity `g√s/(p⁰q⁰)`.
pub fn moller_velocity(p: &Momentum, q: &Momentum) -> f64 {
    let inv = pair_invariants(p, q);
    inv.g * inv.s.sqrt() / (p.p0() * q.p0())
}

/// Normalized Jüttner weight `e^{−p⁰}/(4π)`.
pub fn juttner(p: &Momentum) -> f64 {
    (-p.p0()).exp() / (4.0 * std::f64::consts::PI)
}

/// `g² − [g̃² − ½(p + q′)·(p′ + q − p − q′)]`, Minkowski products throughout.
pub fn claim_gg_residual(p: &Momentum, q: &Momentum, p_prime: &Momentum, q_prime: &Momentum) -> f64 {
    let g = relative_momentum(p, q);
    let gt = relative_momentum(p_prime, q);
    let (a, b, c, d) = (p.four(), q.four(), p_prime.four(), q_prime.four());
    let x = [a[0] + d[0], a[1] + d[1], a[2] + d[2], a[3] + d[3]];
    // (p′ + q) − (p + q′) = 2(p′ − p) by conservation, evaluated directly
    let y = [c[0] + b[0] - a[0] - d[0], c[1] + b[1] - a[1] - d[1], c[2] + b[2] - a[2] - d[2], c[3] + b[3] - a[3] - d[3]];
    g * g - (gt * gt - 0.5 * minkowski(&x, &y))
}

/// The boost-and-rotation taking the pair to its center-of-momentum frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComFrame {
    pub lambda: [[f64; 4]; 4],
}

impl ComFrame {
    pub fn apply(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (mu, row) in self.lambda.iter().enumerate() {
            out[mu] = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `Λᵀ η Λ`.
    pub fn metric_check(&self) -> [[f64; 4]; 4] {
        let eta = [-1.0, 1.0, 1.0, 1.0];
        let mut out = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                out[a][b] = (0..4).map(|mu| self.lambda[mu][a] * eta[mu] * self.lambda[mu][b]).sum();
            }
        }
        out
    }
}

fn eta_dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    minkowski(a, b)
}

pub fn com_frame(p: &Momentum, q: &Momentum) -> Result<ComFrame, KinematicsError> {
    let inv = pair_invariants(p, q);
    if inv.is_degenerate() {
        return Err(KinematicsError::DegeneratePair);
    }
    let (g, rs) = (inv.g, inv.s.sqrt());
    let (pv, qv) = (p.vec(), q.vec());
    let (p0, q0) = (p.p0(), q.p0());
    let tot = add(&pv, &qv);
    let dif = sub(&pv, &qv);
    let row0 = [(p0 + q0) / rs, -tot[0] / rs, -tot[1] / rs, -tot[2] / rs];
    let row3 = [(p0 - q0) / g, -dif[0] / g, -dif[1] / g, -dif[2] / g];
    let cx = cross(&pv, &qv);
    let cn = norm(&cx);
    let (row1, row2) = if cn >= 1e-10 * p0 * q0 {
        // p·q = 1 − s/2 = −(1 + g²/2), without the cancellation of the direct product
        let pmq = -(1.0 + 0.5 * g * g);
        let a = p0 + q0 * pmq;
        let b = q0 + p0 * pmq;
        let den = g * rs * cn;
        let row1 = [
            2.0 * cn / (g * rs),
            2.0 * (pv[0] * a + qv[0] * b) / den,
            2.0 * (pv[1] * a + qv[1] * b) / den,
            2.0 * (pv[2] * a + qv[2] * b) / den,
        ];
        let row2 = [0.0, cx[0] / cn, cx[1] / cn, cx[2] / cn];
        (row1, row2)
    } else {
        complete_collinear(&row0, &row3)
    };
    Ok(ComFrame { lambda: [row0, row1, row2, row3] })
}

/// Gram–Schmidt in the Minkowski metric against the fixed axes x, y, z.
fn complete_collinear(row0: &[f64; 4], row3: &[f64; 4]) -> ([f64; 4], [f64; 4]) {
    let mut basis: Vec<([f64; 4], f64)> = vec![(*row0, -1.0), (*row3, 1.0)];
    let mut out = Vec::with_capacity(2);
    for axis in 0..3 {
        if out.len() == 2 {
            break;
        }
        let mut e = [0.0; 4];
        e[axis + 1] = 1.0;
        for (b, nb) in &basis {
            let c = eta_dot(&e, b) / nb;
            for k in 0..4 {
                e[k] -= c * b[k];
            }
        }
        let n2 = eta_dot(&e, &e);
        if n2 < 1e-6 {
            continue;
        }
        let n = n2.sqrt();
        for x in e.iter_mut() {
            *x /= n;
        }
        basis.push((e, 1.0));
        out.push(e);
    }
    (out[0], out[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&[0.0, 0.0, 0.0]), 1.0);
        assert!((energy(&[1.0, 0.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((energy(&[3.0, 4.0, 0.0]) - 26f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn forward_direction_reproduces_p() {
        let p = Momentum::new(0.3, -1.2, 2.0);
        let q = Momentum::new(-0.7, 0.4, 0.1);
        let w = forward_direction(&p, &q).unwrap();
        assert!((norm(&w) - 1.0).abs() < 1e-13);
        let (pp, qq) = post_collision(&p, &q, &w);
        assert!(norm(&sub(&pp.vec(), &p.vec())) < 1e-13);
        assert!(norm(&sub(&qq.vec(), &q.vec())) < 1e-13);
    }

    #[test]
    fn collinear_frame_is_lorentz() {
        let p = Momentum::new(1.0, 0.0, 0.0);
        let q = Momentum::new(-1.0, 0.0, 0.0);
        let f = com_frame(&p, &q).unwrap();
        assert!((f.lambda[0][0] - 1.0).abs() < 1e-15);
        let m = f.metric_check();
        let eta = [-1.0, 1.0, 1.0, 1.0];
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { eta[a] } else { 0.0 };
                assert!((m[a][b] - want).abs() < 1e-12);
            }
        }
    }
}
