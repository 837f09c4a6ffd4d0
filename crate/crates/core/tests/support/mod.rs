//! Independent oracles shared by the integration tests.
//!
//! The finite-difference oracle simulates both ansätze by hand in
//! double-double arithmetic. Energies here reach 1e6 MeV², so a plain f64
//! central difference at h = 1e-5 carries roundoff of order 1e-5 on its own.
#![allow(dead_code)]

use lfvqe::{EncodingKind, HermitianMatrix, Unit};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> HermitianMatrix {
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for r in 0..dim {
        m[(r, r)] = Complex64::new(scale * rng.random_range(-1.0..1.0), 0.0);
        for c in r + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    HermitianMatrix::new(m, Unit::Dimensionless).unwrap()
}

pub fn random_angles(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

/// Unnormalized double-double number `hi + lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let u = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(u.hi, u.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

#[derive(Debug, Clone, Copy)]
struct Cd {
    re: Dd,
    im: Dd,
}

impl Cd {
    fn real(x: Dd) -> Cd {
        Cd { re: x, im: Dd::ZERO }
    }

    fn add(self, o: Cd) -> Cd {
        Cd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    fn mul(self, o: Cd) -> Cd {
        Cd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn scale(self, x: Dd) -> Cd {
        Cd { re: self.re.mul(x), im: self.im.mul(x) }
    }

    fn conj(self) -> Cd {
        Cd { re: self.re, im: self.im.neg() }
    }
}

/// `(cos, sin)` of `base + offset`, with `offset` tiny and exact.
///
/// The f64 values at `base` are taken as given and rotated by the offset in
/// double-double; any error they carry is a common scale shared by every
/// offset and cancels from the difference quotient.
fn cos_sin(base: f64, offset: f64) -> (Dd, Dd) {
    let (s0, c0) = base.sin_cos();
    let (c0, s0) = (Dd::new(c0), Dd::new(s0));
    if offset == 0.0 {
        return (c0, s0);
    }
    let t = Dd::new(offset);
    let t2 = t.mul(t);
    // Taylor series to t⁷; |t| ≤ 1e-4 makes the remainder < 1e-36
    let cos_t = Dd::new(1.0)
        .sub(t2.mul(Dd::new(0.5)))
        .add(t2.mul(t2).mul(Dd::new(1.0 / 24.0)))
        .sub(t2.mul(t2).mul(t2).mul(Dd::new(1.0 / 720.0)));
    let sin_t = t
        .sub(t.mul(t2).mul(Dd::new(1.0 / 6.0)))
        .add(t.mul(t2).mul(t2).mul(Dd::new(1.0 / 120.0)))
        .sub(t.mul(t2).mul(t2).mul(t2).mul(Dd::new(1.0 / 5040.0)));
    (c0.mul(cos_t).sub(s0.mul(sin_t)), s0.mul(cos_t).add(c0.mul(sin_t)))
}

/// Mode amplitudes of the direct ansatz, parameter `k` offset by `dk`.
///
/// X(q1); CRy(θ1) q1→q2; CX q2→q1; CRy(θ2) q1→q0; CRy(θ3) q2→q3; CX q0→q1;
/// CX q3→q2 leaves the one-hot amplitudes
/// (c1·s2, c1·c2, s1·c3, s1·s3) with c_i = cos(θ_i/2), s_i = sin(θ_i/2).
fn direct_modes(theta: &[f64], k: usize, dk: f64) -> Vec<Cd> {
    let half = |i: usize| cos_sin(theta[i] / 2.0, if i == k { dk / 2.0 } else { 0.0 });
    let (c1, s1) = half(0);
    let (c2, s2) = half(1);
    let (c3, s3) = half(2);
    [c1.mul(s2), c1.mul(c2), s1.mul(c3), s1.mul(s3)].into_iter().map(Cd::real).collect()
}

/// U(θ, φ, λ) = [[c, −e^{iλ} s], [e^{iφ} s, e^{i(φ+λ)} c]], half-angle θ.
fn u_gate(p: &[f64], k: usize, dk: f64) -> [[Cd; 2]; 2] {
    let off = |i: usize| if i == k { dk } else { 0.0 };
    let (c, s) = cos_sin(p[0] / 2.0, off(0) / 2.0);
    let (cp, sp) = cos_sin(p[1], off(1));
    let (cl, sl) = cos_sin(p[2], off(2));
    let ephi = Cd { re: cp, im: sp };
    let elam = Cd { re: cl, im: sl };
    [
        [Cd::real(c), elam.scale(s.neg())],
        [ephi.scale(s), ephi.mul(elam).scale(c)],
    ]
}

fn apply_1q(state: &mut [Cd; 4], target: usize, u: &[[Cd; 2]; 2]) {
    let bit = 1 << target;
    for i in 0..4 {
        if i & bit == 0 {
            let (a, b) = (state[i], state[i | bit]);
            state[i] = u[0][0].mul(a).add(u[0][1].mul(b));
            state[i | bit] = u[1][0].mul(a).add(u[1][1].mul(b));
        }
    }
}

/// Basis amplitudes of the compact ansatz: U on q0, U on q1, CX q1→q0, U on q0.
fn compact_modes(p: &[f64], k: usize, dk: f64) -> Vec<Cd> {
    let shift = |base: usize| if (base..base + 3).contains(&k) { (k - base, dk) } else { (usize::MAX, 0.0) };
    let mut st = [Cd::real(Dd::ZERO); 4];
    st[0] = Cd::real(Dd::new(1.0));
    let (ka, da) = shift(0);
    apply_1q(&mut st, 0, &u_gate(&p[0..3], ka, da));
    let (kb, db) = shift(3);
    apply_1q(&mut st, 1, &u_gate(&p[3..6], kb, db));
    st.swap(2, 3);
    let (kc, dc) = shift(6);
    apply_1q(&mut st, 0, &u_gate(&p[6..9], kc, dc));
    st.to_vec()
}

/// `⟨ψ|H|ψ⟩` in mode space, double-double.
fn energy(h: &HermitianMatrix, amps: &[Cd]) -> Dd {
    let mut e = Cd::real(Dd::ZERO);
    for (r, ar) in amps.iter().enumerate() {
        for (c, ac) in amps.iter().enumerate() {
            let z = h.get(r, c);
            let hz = Cd { re: Dd::new(z.re), im: Dd::new(z.im) };
            e = e.add(ar.conj().mul(hz).mul(*ac));
        }
    }
    e.re
}

/// Central finite-difference gradient `(E(θ + h e_k) − E(θ − h e_k)) / 2h`
/// of the 4-mode ansatz energy for `h`.
pub fn central_difference(h_modes: &HermitianMatrix, encoding: EncodingKind, theta: &[f64], step: f64) -> Vec<f64> {
    let modes = |k: usize, dk: f64| match encoding {
        EncodingKind::Direct => direct_modes(theta, k, dk),
        EncodingKind::Compact => compact_modes(theta, k, dk),
    };
    (0..theta.len())
        .map(|k| {
            let up = energy(h_modes, &modes(k, step));
            let down = energy(h_modes, &modes(k, -step));
            up.sub(down).to_f64() / (2.0 * step)
        })
        .collect()
}

/// Ansatz energy from the same hand simulation, for cross-checking it.
pub fn oracle_energy(h_modes: &HermitianMatrix, encoding: EncodingKind, theta: &[f64]) -> f64 {
    let amps = match encoding {
        EncodingKind::Direct => direct_modes(theta, usize::MAX, 0.0),
        EncodingKind::Compact => compact_modes(theta, usize::MAX, 0.0),
    };
    energy(h_modes, &amps).to_f64()
}
