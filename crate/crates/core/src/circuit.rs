//! Statevector simulation and the two ansatz circuits.
//!
//! Direct ansatz on four qubits (one-hot states, real amplitudes):
//!
//! ```text
//! q0 ─────────────────────────── Ry(θ2) ──●────
//! q1 ── X ──●──────── X ──────────●─────── X ───
//! q2 ───────Ry(θ1)────●───────────●──────── X ──
//! q3 ──────────────────────────── Ry(θ3) ──●───
//! ```
//!
//! which prepares `c1·s2|q0⟩ + c1·c2|q1⟩ + s1·c3|q2⟩ + s1·s3|q3⟩` with
//! `c_k = cos(θ_k/2)`, `s_k = sin(θ_k/2)`.
//!
//! Compact ansatz on two qubits: `U(θ1,φ1,λ1)` on q0 and `U(θ2,φ2,λ2)` on q1,
//! a CNOT controlled by q1 onto q0, then `U(θ3,φ3,λ3)` on q0.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::{mode_basis_index, EncodingKind};
use crate::error::{Error, Result};
use crate::optim::{NelderMead, NelderMeadConfig};

const NORM_TOL: f64 = 1e-10;
/// Amplitudes below this magnitude count as zero in subspace checks.
pub const ZERO_AMPLITUDE: f64 = 1e-12;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    X { target: usize },
    Ry { target: usize, angle: f64 },
    U { target: usize, theta: f64, phi: f64, lambda: f64 },
    Cx { control: usize, target: usize },
    Cry { control: usize, target: usize, angle: f64 },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::X { target }
            | Gate::Ry { target, .. }
            | Gate::U { target, .. }
            | Gate::Cx { target, .. }
            | Gate::Cry { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cx { control, .. } | Gate::Cry { control, .. } => Some(control),
            _ => None,
        }
    }

    /// The 2×2 block acting on the target qubit.
    pub fn matrix(&self) -> Mat2 {
        match *self {
            Gate::X { .. } | Gate::Cx { .. } => [[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]],
            Gate::Ry { angle, .. } | Gate::Cry { angle, .. } => ry_matrix(angle),
            Gate::U { theta, phi, lambda, .. } => u_matrix(theta, phi, lambda),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q >= n_qubits {
                Err(Error::QubitOutOfRange { index: q, n_qubits })
            } else {
                Ok(())
            }
        };
        check(self.target())?;
        if let Some(c) = self.control() {
            check(c)?;
            if c == self.target() {
                return Err(Error::ControlIsTarget(c));
            }
        }
        Ok(())
    }
}

pub fn ry_matrix(angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    [[cr(c), cr(-s)], [cr(s), cr(c)]]
}

pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let e = |a: f64| Complex64::from_polar(1.0, a);
    [[cr(c), -e(lambda) * s], [e(phi) * s, e(phi + lambda) * c]]
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X { target } => write!(f, "x {target}"),
            Gate::Ry { target, angle } => write!(f, "ry {target} {angle}"),
            Gate::U { target, theta, phi, lambda } => write!(f, "u {target} {theta} {phi} {lambda}"),
            Gate::Cx { control, target } => write!(f, "cx {target} {control}"),
            Gate::Cry { control, target, angle } => write!(f, "cry {target} {control} {angle}"),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let bad = || Error::Parse(format!("bad gate line `{s}`"));
        let q = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).ok_or_else(bad);
        let a = |i: usize| parts.get(i).and_then(|p| p.parse::<f64>().ok()).ok_or_else(bad);
        let (gate, arity) = match parts.first().copied() {
            Some("x") => (Gate::X { target: q(1)? }, 2),
            Some("ry") => (Gate::Ry { target: q(1)?, angle: a(2)? }, 3),
            Some("u") => (Gate::U { target: q(1)?, theta: a(2)?, phi: a(3)?, lambda: a(4)? }, 5),
            Some("cx") => (Gate::Cx { target: q(1)?, control: q(2)? }, 3),
            Some("cry") => (Gate::Cry { target: q(1)?, control: q(2)?, angle: a(3)? }, 4),
            _ => return Err(bad()),
        };
        if parts.len() != arity {
            return Err(bad());
        }
        Ok(gate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// One gate per line: `<kind> <target> [control] [angles…]`.
    pub fn to_text(&self) -> String {
        self.gates.iter().map(|g| format!("{g}\n")).collect()
    }

    pub fn from_text(n_qubits: usize, text: &str) -> Result<Circuit> {
        let mut c = Circuit::new(n_qubits);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            c.push(line.parse()?)?;
        }
        Ok(c)
    }
}

/// Normalized amplitude vector over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![cr(0.0); 1 << n_qubits];
        amplitudes[0] = cr(1.0);
        StateVector { n_qubits, amplitudes }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut amplitudes = vec![cr(0.0); 1 << n_qubits];
        *amplitudes
            .get_mut(index)
            .ok_or(Error::QubitOutOfRange { index, n_qubits })? = cr(1.0);
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Wraps amplitudes; the norm must be 1 within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = crate::pauli::qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Normalizes before wrapping.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amplitudes)
    }

    /// Places per-mode amplitudes on the basis states of an encoding.
    pub fn from_modes(modes: &[Complex64], encoding: EncodingKind) -> Result<Self> {
        let n_qubits = crate::encoding::qubit_count(encoding, modes.len());
        let mut amplitudes = vec![cr(0.0); 1 << n_qubits];
        for (k, &a) in modes.iter().enumerate() {
            amplitudes[mode_basis_index(encoding, k)] = a;
        }
        StateVector::from_amplitudes(amplitudes)
    }

    /// Per-mode amplitudes read back from the encoding's basis states.
    pub fn mode_amplitudes(&self, encoding: EncodingKind, n_modes: usize) -> Vec<Complex64> {
        (0..n_modes)
            .map(|k| self.amplitudes.get(mode_basis_index(encoding, k)).copied().unwrap_or(cr(0.0)))
            .collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        if self.n_qubits != other.n_qubits {
            return 0.0;
        }
        self.inner(other).norm_sqr()
    }

    /// Total probability on basis states with more or fewer than one set bit.
    pub fn leakage_outside_one_hot(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i.count_ones() != 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let cmask = gate.control().map_or(0, |c| 1usize << c);
        self.apply_block(gate.target(), cmask, &gate.matrix());
        Ok(())
    }

    /// Applies a 2×2 block on `target` wherever all bits of `control_mask` are set.
    pub(crate) fn apply_block(&mut self, target: usize, control_mask: usize, m: &Mat2) {
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & control_mask != control_mask {
                continue;
            }
            let j = i | tbit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a + m[0][1] * b;
            self.amplitudes[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    pub fn apply(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_mut(gate)?;
        Ok(out)
    }
}

/// Applies every gate in order to `|0…0⟩`.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.n_qubits);
    for g in &circuit.gates {
        state.apply_mut(g)?;
    }
    Ok(state)
}

/// Variational angles for one of the ansatz circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub encoding: EncodingKind,
    pub values: Vec<f64>,
}

impl AnsatzParams {
    pub fn new(encoding: EncodingKind, values: Vec<f64>) -> Self {
        AnsatzParams { encoding, values }
    }

    pub fn zeros(encoding: EncodingKind, n_qubits: usize) -> Result<Self> {
        Ok(AnsatzParams::new(encoding, vec![0.0; param_count(encoding, n_qubits)?]))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with every angle wrapped into `[-π, π]`. Note that for `Ry` and
    /// `θ` of `U`, a `2π` wrap flips the sign of the prepared branch, so this
    /// is a canonical label rather than a state-preserving map.
    pub fn wrapped(&self) -> AnsatzParams {
        AnsatzParams::new(self.encoding, self.values.iter().map(|&v| wrap_angle(v)).collect())
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Number of ansatz angles for an encoding on `n_qubits` qubits.
///
/// Supported layouts: direct on 4 qubits (3 angles) or 2 qubits (1 angle);
/// compact on 2 qubits (9 angles) or 1 qubit (3 angles).
pub fn param_count(encoding: EncodingKind, n_qubits: usize) -> Result<usize> {
    match (encoding, n_qubits) {
        (EncodingKind::Direct, 4) => Ok(3),
        (EncodingKind::Direct, 2) => Ok(1),
        (EncodingKind::Compact, 2) => Ok(9),
        (EncodingKind::Compact, 1) => Ok(3),
        _ => Err(Error::invalid(
            "n_qubits",
            format!("no {encoding:?} ansatz on {n_qubits} qubits"),
        )),
    }
}

/// How a single parameter enters the circuit; decides its shift rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Single-qubit rotation or phase: two eigenvalues, one frequency.
    SingleQubit,
    /// Controlled rotation: generator eigenvalues {0, ±1/2}.
    Controlled,
}

/// Builds the standard ansatz; the qubit count is fixed by the four-mode
/// layouts (direct: 4 qubits, compact: 2 qubits).
pub fn build_ansatz(params: &AnsatzParams) -> Result<Circuit> {
    let n = match params.encoding {
        EncodingKind::Direct => 4,
        EncodingKind::Compact => 2,
    };
    build_ansatz_on(n, params)
}

pub fn build_ansatz_on(n_qubits: usize, params: &AnsatzParams) -> Result<Circuit> {
    let expected = param_count(params.encoding, n_qubits)?;
    if params.values.len() != expected {
        return Err(Error::ParamCount {
            expected,
            found: params.values.len(),
        });
    }
    let v = &params.values;
    let mut c = Circuit::new(n_qubits);
    match (params.encoding, n_qubits) {
        (EncodingKind::Direct, 4) => {
            c.push(Gate::X { target: 1 })?;
            c.push(Gate::Cry { control: 1, target: 2, angle: v[0] })?;
            c.push(Gate::Cx { control: 2, target: 1 })?;
            c.push(Gate::Cry { control: 1, target: 0, angle: v[1] })?;
            c.push(Gate::Cry { control: 2, target: 3, angle: v[2] })?;
            c.push(Gate::Cx { control: 0, target: 1 })?;
            c.push(Gate::Cx { control: 3, target: 2 })?;
        }
        (EncodingKind::Direct, _) => {
            c.push(Gate::X { target: 1 })?;
            c.push(Gate::Cry { control: 1, target: 0, angle: v[0] })?;
            c.push(Gate::Cx { control: 0, target: 1 })?;
        }
        (EncodingKind::Compact, 2) => {
            c.push(Gate::U { target: 0, theta: v[0], phi: v[1], lambda: v[2] })?;
            c.push(Gate::U { target: 1, theta: v[3], phi: v[4], lambda: v[5] })?;
            c.push(Gate::Cx { control: 1, target: 0 })?;
            c.push(Gate::U { target: 0, theta: v[6], phi: v[7], lambda: v[8] })?;
        }
        (EncodingKind::Compact, _) => {
            c.push(Gate::U { target: 0, theta: v[0], phi: v[1], lambda: v[2] })?;
        }
    }
    Ok(c)
}

/// Generator class of each parameter, in parameter order.
pub fn generators(encoding: EncodingKind, n_qubits: usize) -> Result<Vec<Generator>> {
    let n = param_count(encoding, n_qubits)?;
    Ok(match encoding {
        EncodingKind::Direct => vec![Generator::Controlled; n],
        EncodingKind::Compact => vec![Generator::SingleQubit; n],
    })
}

/// Prepares the ansatz state for `params` on `n_qubits` qubits.
pub fn prepare(n_qubits: usize, params: &AnsatzParams) -> Result<StateVector> {
    run(&build_ansatz_on(n_qubits, params)?)
}

/// Finds ansatz angles reproducing `target` up to global phase.
///
/// Closed-form for every supported layout; a Nelder–Mead polish on the
/// infidelity runs only if the closed form misses `1 − 1e-10`.
pub fn synthesize_params(target: &StateVector, encoding: EncodingKind) -> Result<AnsatzParams> {
    let norm = target.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let n = target.n_qubits();
    param_count(encoding, n)?;
    let values = match (encoding, n) {
        (EncodingKind::Direct, _) => synth_direct(target)?,
        (EncodingKind::Compact, 1) => synth_u(target.amplitudes()[0], target.amplitudes()[1]).to_vec(),
        (EncodingKind::Compact, _) => synth_compact2(target.amplitudes()),
    };
    let params = AnsatzParams::new(encoding, values);
    let fid = target.fidelity(&prepare(n, &params)?);
    if fid >= 1.0 - 1e-10 {
        return Ok(params);
    }
    Ok(polish(target, params))
}

/// Convenience wrapper taking per-mode amplitudes.
pub fn synthesize_from_modes(modes: &[Complex64], encoding: EncodingKind) -> Result<AnsatzParams> {
    synthesize_params(&StateVector::from_modes(modes, encoding)?, encoding)
}

fn polish(target: &StateVector, start: AnsatzParams) -> AnsatzParams {
    let n = target.n_qubits();
    let enc = start.encoding;
    let mut f = |x: &[f64]| {
        let p = AnsatzParams::new(enc, x.to_vec());
        1.0 - prepare(n, &p).map(|s| target.fidelity(&s)).unwrap_or(0.0)
    };
    let cfg = NelderMeadConfig { initial_step: 0.05 };
    let mut nm = NelderMead::new(&mut f, start.values.clone(), cfg);
    for _ in 0..5000 {
        nm.step(&mut f);
        if nm.best().1 < 1e-12 {
            break;
        }
    }
    AnsatzParams::new(enc, nm.best().0.to_vec())
}

/// Strips the global phase that makes the largest amplitude real positive.
fn dephase(amps: &[Complex64]) -> Vec<Complex64> {
    let pivot = amps
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(cr(1.0));
    let phase = Complex64::from_polar(1.0, -pivot.arg());
    amps.iter().map(|a| a * phase).collect()
}

fn synth_direct(target: &StateVector) -> Result<Vec<f64>> {
    if target.leakage_outside_one_hot() > 1e-10 {
        return Err(Error::OutsideSubspace);
    }
    let n = target.n_qubits();
    let modes = dephase(&target.mode_amplitudes(EncodingKind::Direct, n));
    if modes.iter().any(|a| a.im.abs() > 1e-10) {
        return Err(Error::NotReal);
    }
    let mut v: Vec<f64> = modes.iter().map(|a| a.re).collect();
    // The circuit forces a non-negative amplitude on mode 1; use the global
    // sign freedom to match it.
    if v[1] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    if n == 2 {
        return Ok(vec![2.0 * v[0].atan2(v[1])]);
    }
    let r01 = v[0].hypot(v[1]);
    let r23 = v[2].hypot(v[3]);
    let sign = if v[2] < 0.0 { -1.0 } else { 1.0 };
    let theta1 = 2.0 * (sign * r23).atan2(r01);
    let theta2 = 2.0 * v[0].atan2(v[1]);
    let theta3 = 2.0 * (sign * v[3]).atan2(v[2].abs());
    Ok(vec![theta1, theta2, theta3])
}

/// `U(θ, φ, 0)|0⟩ ∝ (a0, a1)`.
fn synth_u(a0: Complex64, a1: Complex64) -> [f64; 3] {
    let theta = 2.0 * a1.norm().atan2(a0.norm());
    let phi = if a1.norm() > ZERO_AMPLITUDE && a0.norm() > ZERO_AMPLITUDE {
        wrap_angle(a1.arg() - a0.arg())
    } else {
        0.0
    };
    [theta, phi, 0.0]
}

fn orthogonal(v: [Complex64; 2]) -> [Complex64; 2] {
    [-v[1].conj(), v[0].conj()]
}

fn vnorm(v: [Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn vscale(v: [Complex64; 2], s: Complex64) -> [Complex64; 2] {
    [v[0] * s, v[1] * s]
}

fn vdot(a: [Complex64; 2], b: [Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// `(θ, φ, λ)` with `V = e^{iγ} U(θ, φ, λ)` for a 2×2 unitary `V`.
fn u_angles(v: Mat2) -> [f64; 3] {
    let (c, s) = (v[0][0].norm(), v[1][0].norm());
    let theta = 2.0 * s.atan2(c);
    let (phi, lambda) = if c > 1e-9 {
        let gamma = v[0][0].arg();
        if s > 1e-9 {
            (v[1][0].arg() - gamma, (-v[0][1]).arg() - gamma)
        } else {
            (v[1][1].arg() - gamma, 0.0)
        }
    } else {
        let gamma = v[1][0].arg();
        (0.0, (-v[0][1]).arg() - gamma)
    };
    [theta, wrap_angle(phi), wrap_angle(lambda)]
}

/// Closed form for the compact two-qubit circuit.
///
/// Write the target as rows `u` (q1 = 0) and `w` (q1 = 1) over q0. The circuit
/// yields `a·U3(c, d)` and `b·U3(d, c)` for those rows, where `(c, d)` comes
/// from the first U and `(a, b)` from the second. `⟨(c,d),(d,c)⟩ = sin θ1`
/// is real, so the phase of `⟨û, ŵ⟩` goes into `b` and its modulus fixes θ1.
fn synth_compact2(amps: &[Complex64]) -> Vec<f64> {
    let mut u = [amps[0], amps[1]];
    let mut w = [amps[2], amps[3]];
    let (n0, n1) = (vnorm(u), vnorm(w));
    if n0 < ZERO_AMPLITUDE {
        w = vscale(w, cr(1.0 / n1));
        u = orthogonal(w);
    } else if n1 < ZERO_AMPLITUDE {
        u = vscale(u, cr(1.0 / n0));
        w = orthogonal(u);
    } else {
        u = vscale(u, cr(1.0 / n0));
        w = vscale(w, cr(1.0 / n1));
    }
    let overlap = vdot(u, w);
    let (r, omega) = (overlap.norm().min(1.0), overlap.arg());
    let w = vscale(w, Complex64::from_polar(1.0, -omega));

    // sin θ1 = r with θ1 ∈ [0, π/2]
    let theta1 = r.asin();
    let (sd, cd) = (theta1 / 2.0).sin_cos();
    let s1 = [cr(cd), cr(sd)];
    let s2_raw = [cr(sd) - s1[0] * r, cr(cd) - s1[1] * r];
    let t2_raw = [w[0] - u[0] * r, w[1] - u[1] * r];
    let (s2, t2) = if vnorm(s2_raw) > 1e-9 && vnorm(t2_raw) > 1e-9 {
        (
            vscale(s2_raw, cr(1.0 / vnorm(s2_raw))),
            vscale(t2_raw, cr(1.0 / vnorm(t2_raw))),
        )
    } else {
        (orthogonal(s1), orthogonal(u))
    };
    // V = u·s1† + t2·s2†
    let mut v: Mat2 = [[cr(0.0); 2]; 2];
    for (row, vrow) in v.iter_mut().enumerate() {
        for (col, entry) in vrow.iter_mut().enumerate() {
            *entry = u[row] * s1[col].conj() + t2[row] * s2[col].conj();
        }
    }
    let [t3, p3, l3] = u_angles(v);
    let theta2 = 2.0 * n1.atan2(n0);
    vec![theta1, 0.0, 0.0, theta2, wrap_angle(omega), 0.0, t3, p3, l3]
}
