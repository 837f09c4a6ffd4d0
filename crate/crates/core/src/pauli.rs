//! Pauli strings, weighted Pauli sums, and dense Hermitian matrices.
//!
//! Bit convention used throughout the crate: qubit 0 is the least-significant
//! bit of a computational-basis index, so a term acting as `letter(k)` on
//! qubit `k` has matrix `letter(n-1) ⊗ … ⊗ letter(0)`. Serialized strings put
//! qubit 0 leftmost: `"XZII"` is X on qubit 0 and Z on qubit 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Unit;

const HERMITIAN_TOL: f64 = 1e-12;
const PRUNE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A tensor product of single-qubit Pauli letters, one per qubit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliTerm {
    letters: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("n_qubits", "a Pauli term needs at least one qubit"));
        }
        Ok(PauliTerm { letters })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliTerm {
            letters: vec![Pauli::I; n_qubits.max(1)],
        }
    }

    /// Builds a term from `(qubit, letter)` pairs; unlisted qubits get `I`.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            letters[q] = p;
        }
        PauliTerm::new(letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        self.letters[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
    }

    /// Bits flipped by the term (X or Y positions).
    pub fn x_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bits picking up a sign (Z or Y positions).
    pub fn z_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::Z | Pauli::Y))
    }

    fn mask(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| pred(p))
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// Returns `(j, phase)` with `P|i⟩ = phase·|j⟩`.
    #[inline]
    pub fn apply_to_basis(&self, index: usize) -> (usize, Complex64) {
        let sign = if (index & self.z_mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (index ^ self.x_mask(), i_power(self.y_count()) * sign)
    }

    /// Dense `2^n × 2^n` matrix of the term.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let (x, z, base) = (self.x_mask(), self.z_mask(), i_power(self.y_count()));
        DMatrix::from_fn(dim, dim, |r, c| {
            if r == c ^ x {
                let sign = if (c & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                base * sign
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

fn i_power(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter `{c}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        PauliTerm::new(letters)
    }
}

impl Serialize for PauliTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Matrix of a single Pauli term, wrapped as a dimensionless Hermitian matrix.
pub fn matrix_of(term: &PauliTerm) -> HermitianMatrix {
    HermitianMatrix {
        entries: term.matrix(),
        units: Unit::Dimensionless,
    }
}

/// A real-weighted sum of Pauli terms on a fixed number of qubits.
///
/// Terms are kept in a `BTreeMap`, so iteration order (and therefore every
/// summation over terms) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliTerm, f64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits: n_qubits.max(1),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliTerm, f64)>,
    {
        let mut sum = PauliSum::new(n_qubits);
        for (t, c) in terms {
            sum.add_term(t, c)?;
        }
        Ok(sum)
    }

    /// Adds `coefficient · term`, merging with an existing entry.
    pub fn add_term(&mut self, term: PauliTerm, coefficient: f64) -> Result<()> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: term.n_qubits(),
            });
        }
        if !coefficient.is_finite() {
            return Err(Error::invalid("coefficient", format!("{coefficient} is not finite")));
        }
        let entry = self.terms.entry(term.clone()).or_insert(0.0);
        *entry += coefficient;
        if !entry.is_finite() {
            return Err(Error::Overflow);
        }
        if *entry == 0.0 {
            self.terms.remove(&term);
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliTerm, f64)> {
        self.terms.iter().map(|(t, &c)| (t, c))
    }

    pub fn coefficient(&self, term: &PauliTerm) -> f64 {
        self.terms.get(term).copied().unwrap_or(0.0)
    }

    /// Coefficient of the term given as a string, e.g. `"ZZ"`.
    pub fn coefficient_of(&self, letters: &str) -> f64 {
        letters.parse().map(|t| self.coefficient(&t)).unwrap_or(0.0)
    }

    /// Sum of `|h|` over non-identity terms; bounds the spread of ⟨ψ|·|ψ⟩.
    pub fn weight_norm(&self) -> f64 {
        self.iter().filter(|(t, _)| !t.is_identity()).map(|(_, c)| c.abs()).sum()
    }

    pub fn scale(&self, factor: f64) -> PauliSum {
        let mut out = PauliSum::new(self.n_qubits);
        for (t, c) in self.iter() {
            // add_term drops exact zeros
            let _ = out.add_term(t.clone(), c * factor);
        }
        out
    }

    /// Linear combination `self + factor·other`.
    pub fn add_scaled(&self, other: &PauliSum, factor: f64) -> Result<PauliSum> {
        let mut out = self.clone();
        for (t, c) in other.iter() {
            out.add_term(t.clone(), factor * c)?;
        }
        Ok(out)
    }

    /// Serializes one term per line as `<letters> <coefficient>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (t, c) in self.iter() {
            s.push_str(&format!("{t} {c}\n"));
        }
        s
    }

    /// Parses the line format written by [`PauliSum::to_text`]. Blank lines and
    /// `#` comments are skipped. `n_qubits` is required only for an empty sum.
    pub fn from_text(text: &str, n_qubits: Option<usize>) -> Result<PauliSum> {
        let mut parsed = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(letters), Some(coef), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("line {}: expected `<letters> <coefficient>`", lineno + 1)));
            };
            let term: PauliTerm = letters.parse()?;
            let coef: f64 = coef
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad coefficient `{coef}`", lineno + 1)))?;
            parsed.push((term, coef));
        }
        let n = match (n_qubits, parsed.first()) {
            (Some(n), _) => n,
            (None, Some((t, _))) => t.n_qubits(),
            (None, None) => return Err(Error::Parse("empty Pauli sum with unknown qubit count".into())),
        };
        PauliSum::from_terms(n, parsed)
    }
}

/// Dense Hermitian matrix with a unit tag.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<Complex64>,
    units: Unit,
}

impl HermitianMatrix {
    /// Validates Hermiticity to `1e-12` relative to the largest entry.
    pub fn new(entries: DMatrix<Complex64>, units: Unit) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let deviation = (&entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > HERMITIAN_TOL * scale || entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(HermitianMatrix { entries, units })
    }

    pub fn from_real_rows(rows: &[&[f64]], units: Unit) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("entries", "matrix is not square"));
        }
        HermitianMatrix::new(DMatrix::from_fn(n, n, |r, c| Complex64::new(rows[r][c], 0.0)), units)
    }

    pub fn identity(dim: usize, units: Unit) -> Self {
        HermitianMatrix {
            entries: DMatrix::identity(dim, dim),
            units,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn units(&self) -> Unit {
        self.units
    }

    pub fn with_units(mut self, units: Unit) -> Self {
        self.units = units;
        self
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Lowest eigenvalue and a normalized eigenvector for it.
    pub fn ground_state(&self) -> (f64, DVector<Complex64>) {
        let eig = SymmetricEigen::new(self.entries.clone());
        let (k, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        (lambda, eig.eigenvectors.column(k).into_owned())
    }

    /// Principal submatrix on the listed basis indices.
    pub fn restrict(&self, indices: &[usize]) -> HermitianMatrix {
        let m = DMatrix::from_fn(indices.len(), indices.len(), |r, c| self.entries[(indices[r], indices[c])]);
        HermitianMatrix {
            entries: m,
            units: self.units,
        }
    }

    /// Copy padded to `dim` with `fill` on the new diagonal entries.
    pub fn padded(&self, dim: usize, fill: f64) -> HermitianMatrix {
        let n = self.dim();
        let m = DMatrix::from_fn(dim.max(n), dim.max(n), |r, c| {
            if r < n && c < n {
                self.entries[(r, c)]
            } else if r == c {
                Complex64::new(fill, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HermitianMatrix {
            entries: m,
            units: self.units,
        }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Number of qubits for a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Expands a Hermitian matrix in the Pauli basis, `h_P = Tr(P·H) / 2^n`.
///
/// Coefficients below `1e-12 × max|h|` are dropped. A one-dimensional matrix
/// is treated as a single qubit with the value on both diagonal entries.
pub fn decompose(h: &HermitianMatrix) -> Result<PauliSum> {
    let h = if h.dim() == 1 {
        h.padded(2, h.get(0, 0).re)
    } else {
        h.clone()
    };
    let n = qubits_for_dim(h.dim())?;
    let dim = h.dim();
    let mut raw = Vec::with_capacity(1 << (2 * n));
    for code in 0..(1usize << (2 * n)) {
        let letters: Vec<Pauli> = (0..n).map(|q| Pauli::ALL[(code >> (2 * q)) & 3]).collect();
        let term = PauliTerm { letters };
        // Tr(P·H) = Σ_j ⟨j^x|P|j⟩ H[j][j^x]
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            let (row, phase) = term.apply_to_basis(j);
            acc += phase * h.entries[(j, row)];
        }
        let coef = acc / dim as f64;
        if !coef.re.is_finite() || !coef.im.is_finite() {
            return Err(Error::Overflow);
        }
        debug_assert!(coef.im.abs() <= 1e-9 * (1.0 + coef.re.abs()));
        raw.push((term, coef.re));
    }
    let max = raw.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    let cutoff = PRUNE_REL * max;
    let mut sum = PauliSum::new(n);
    for (t, c) in raw {
        if c.abs() > cutoff && c != 0.0 {
            sum.add_term(t, c)?;
        }
    }
    Ok(sum)
}

/// Rebuilds the dense matrix `Σ h_P · P`.
pub fn reconstruct(s: &PauliSum) -> HermitianMatrix {
    let dim = 1usize << s.n_qubits();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (term, coef) in s.iter() {
        for col in 0..dim {
            let (row, phase) = term.apply_to_basis(col);
            m[(row, col)] += phase * coef;
        }
    }
    HermitianMatrix {
        entries: m,
        units: Unit::Dimensionless,
    }
}

/// Splits off the all-identity coefficient.
pub fn strip_identity(s: &PauliSum) -> (f64, PauliSum) {
    let id = PauliTerm::identity(s.n_qubits());
    let constant = s.coefficient(&id);
    let mut rest = s.clone();
    rest.terms.remove(&id);
    (constant, rest)
}
