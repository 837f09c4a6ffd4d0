//! Single-particle mode operators and their qubit encodings.
//!
//! * Direct: one qubit per mode, Jordan–Wigner strings on lower-indexed
//!   qubits. Mode `k` is the basis state whose only set bit is qubit `k`.
//! * Compact: the index of the occupied mode in binary; mode `k` is basis
//!   index `k`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{decompose, HermitianMatrix, Pauli, PauliSum, PauliTerm};
use crate::units::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Direct,
    Compact,
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(EncodingKind::Direct),
            "compact" => Ok(EncodingKind::Compact),
            other => Err(Error::Parse(format!("unknown encoding `{other}`"))),
        }
    }
}

/// Qubits needed to hold one occupied mode out of `n_modes`.
pub fn qubit_count(kind: EncodingKind, n_modes: usize) -> usize {
    match kind {
        EncodingKind::Direct => n_modes.max(1),
        EncodingKind::Compact => n_modes.max(2).next_power_of_two().trailing_zeros() as usize,
    }
}

/// Computational-basis index representing mode `k`.
pub fn mode_basis_index(kind: EncodingKind, mode: usize) -> usize {
    match kind {
        EncodingKind::Direct => 1 << mode,
        EncodingKind::Compact => mode,
    }
}

/// A Hermitian operator on the single-particle mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    matrix: HermitianMatrix,
}

impl ModeOperator {
    pub fn new(matrix: HermitianMatrix) -> Self {
        ModeOperator { matrix }
    }

    pub fn from_real_rows(rows: &[&[f64]], units: Unit) -> Result<Self> {
        Ok(ModeOperator::new(HermitianMatrix::from_real_rows(rows, units)?))
    }

    pub fn identity(n_modes: usize, units: Unit) -> Self {
        ModeOperator::new(HermitianMatrix::identity(n_modes, units))
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.dim()
    }

    pub fn units(&self) -> Unit {
        self.matrix.units()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix.get(row, col)
    }

    /// Scalar multiple, keeping units.
    pub fn scaled(&self, factor: f64) -> ModeOperator {
        let m = self.matrix.entries() * Complex64::new(factor, 0.0);
        ModeOperator::new(HermitianMatrix::new(m, self.units()).expect("scaling preserves Hermiticity"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModeOperatorFile::from(self)).expect("plain data")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModeOperatorFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }
}

/// On-disk form: `{"n_modes", "units", "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeOperatorFile {
    pub n_modes: usize,
    pub units: Unit,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ModeOperator> for ModeOperatorFile {
    fn from(op: &ModeOperator) -> Self {
        let n = op.n_modes();
        let entries = (0..n * n)
            .map(|k| {
                let z = op.get(k / n, k % n);
                [z.re, z.im]
            })
            .collect();
        ModeOperatorFile {
            n_modes: n,
            units: op.units(),
            entries,
        }
    }
}

impl TryFrom<ModeOperatorFile> for ModeOperator {
    type Error = Error;

    fn try_from(f: ModeOperatorFile) -> Result<Self> {
        if f.n_modes == 0 {
            return Err(Error::invalid("n_modes", "must be positive"));
        }
        if f.entries.len() != f.n_modes * f.n_modes {
            return Err(Error::invalid(
                "entries",
                format!("expected {} entries, found {}", f.n_modes * f.n_modes, f.entries.len()),
            ));
        }
        let n = f.n_modes;
        let m = DMatrix::from_fn(n, n, |r, c| {
            let [re, im] = f.entries[r * n + c];
            Complex64::new(re, im)
        });
        Ok(ModeOperator::new(HermitianMatrix::new(m, f.units)?))
    }
}

/// Jordan–Wigner image of the one-body operator `Σ_jk H_jk a_j† a_k`.
///
/// With `a_k = Z_0…Z_{k-1} (X_k + iY_k)/2`:
/// * `a_k† a_k = (I − Z_k)/2`
/// * for `j < k` and `H_jk = a + ib`, the pair `H_jk a_j†a_k + h.c.` becomes
///   `a/2 (X_j Z… X_k + Y_j Z… Y_k) + b/2 (Y_j Z… X_k − X_j Z… Y_k)`.
///
/// Panics if the coefficients overflow; [`try_encode`] reports that instead.
pub fn encode_direct(op: &ModeOperator) -> PauliSum {
    try_encode_direct(op).expect("coefficients within the f64 range")
}

fn try_encode_direct(op: &ModeOperator) -> Result<PauliSum> {
    let n = op.n_modes();
    let mut sum = PauliSum::new(n);
    let identity = PauliTerm::identity(n);
    let string = |j: usize, k: usize, pj: Pauli, pk: Pauli| {
        let mut letters = vec![Pauli::I; n];
        letters[j] = pj;
        for l in letters.iter_mut().take(k).skip(j + 1) {
            *l = Pauli::Z;
        }
        letters[k] = pk;
        PauliTerm::new(letters).expect("n >= 1")
    };
    let mut add = |t: PauliTerm, c: f64| if c != 0.0 { sum.add_term(t, c) } else { Ok(()) };
    for k in 0..n {
        let hkk = op.get(k, k).re;
        add(identity.clone(), hkk / 2.0)?;
        add(PauliTerm::from_sparse(n, &[(k, Pauli::Z)]).expect("k < n"), -hkk / 2.0)?;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let h = op.get(j, k);
            add(string(j, k, Pauli::X, Pauli::X), h.re / 2.0)?;
            add(string(j, k, Pauli::Y, Pauli::Y), h.re / 2.0)?;
            add(string(j, k, Pauli::Y, Pauli::X), h.im / 2.0)?;
            add(string(j, k, Pauli::X, Pauli::Y), -h.im / 2.0)?;
        }
    }
    Ok(sum)
}

/// Diagonal filler used when the mode count is not a power of two.
pub fn compact_padding_value(op: &ModeOperator) -> f64 {
    10.0 * op.matrix().spectral_radius() + 1.0
}

/// Binary-index image: the (padded) mode matrix is decomposed directly.
///
/// Panics if the coefficients overflow; [`try_encode`] reports that instead.
pub fn encode_compact(op: &ModeOperator) -> PauliSum {
    try_encode_compact(op).expect("coefficients within the f64 range")
}

fn try_encode_compact(op: &ModeOperator) -> Result<PauliSum> {
    let n = op.n_modes();
    let dim = 1usize << qubit_count(EncodingKind::Compact, n);
    let m = if dim == n {
        op.matrix().clone()
    } else {
        op.matrix().padded(dim, compact_padding_value(op))
    };
    decompose(&m)
}

pub fn encode(op: &ModeOperator, kind: EncodingKind) -> PauliSum {
    match kind {
        EncodingKind::Direct => encode_direct(op),
        EncodingKind::Compact => encode_compact(op),
    }
}

/// [`encode`] that returns [`Error::Overflow`] for entries too large to
/// decompose in f64.
pub fn try_encode(op: &ModeOperator, kind: EncodingKind) -> Result<PauliSum> {
    match kind {
        EncodingKind::Direct => try_encode_direct(op),
        EncodingKind::Compact => try_encode_compact(op),
    }
}
