//! Synthetic readout errors and measurement-error mitigation.
//!
//! The noise channel flips each measured bit independently with
//! `P(read 1 | 0) = p01` and `P(read 0 | 1) = p10`. Mitigation solves a
//! least-squares problem over the probability simplex against a calibration
//! matrix `A[i][j] = P(read i | prepared j)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::sampling::{sample_counts, stream_rng};

/// Default synthetic flip probability.
pub const DEFAULT_FLIP_PROBABILITY: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitReadout {
    pub p01: f64,
    pub p10: f64,
}

impl QubitReadout {
    /// `[[1-p01, p10], [p01, 1-p10]]`, indexed `[read][prepared]`.
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p01, self.p10], [self.p01, 1.0 - self.p10]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutNoise {
    pub per_qubit: Vec<QubitReadout>,
}

impl ReadoutNoise {
    pub fn new(per_qubit: Vec<QubitReadout>) -> Result<Self> {
        let noise = ReadoutNoise { per_qubit };
        noise.validate()?;
        Ok(noise)
    }

    /// Same symmetric flip probability on every qubit.
    pub fn uniform(n_qubits: usize, p: f64) -> Result<Self> {
        ReadoutNoise::new(vec![QubitReadout { p01: p, p10: p }; n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.per_qubit.len()
    }

    pub fn validate(&self) -> Result<()> {
        for q in &self.per_qubit {
            for p in [q.p01, q.p10] {
                if !(0.0..=0.5).contains(&p) {
                    return Err(Error::invalid("noise.per_qubit", format!("flip probability {p} outside [0, 0.5]")));
                }
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.per_qubit.iter().all(|q| q.p01 == 0.0 && q.p10 == 0.0)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let n: ReadoutNoise = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        n.validate()?;
        Ok(n)
    }
}

fn check_distribution(dist: &[f64]) -> Result<()> {
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p < -1e-12 || !p.is_finite()) {
        return Err(Error::invalid("distribution", format!("not a probability vector (sum {total})")));
    }
    Ok(())
}

/// Pushes an outcome distribution through the readout channel.
pub fn corrupt(dist: &[f64], noise: &ReadoutNoise) -> Result<Vec<f64>> {
    check_distribution(dist)?;
    if dist.len() != 1 << noise.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << noise.n_qubits(),
            found: dist.len(),
        });
    }
    let mut out = dist.to_vec();
    for (q, readout) in noise.per_qubit.iter().enumerate() {
        let a = readout.confusion();
        let bit = 1usize << q;
        for i in 0..out.len() {
            if i & bit != 0 {
                continue;
            }
            let (p0, p1) = (out[i], out[i | bit]);
            out[i] = a[0][0] * p0 + a[0][1] * p1;
            out[i | bit] = a[1][0] * p0 + a[1][1] * p1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationSource {
    ExactTensor,
    Estimated { shots: u64, seed: u64 },
}

/// Which prepared states a finite-shot calibration uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationScope {
    /// All `2^n` computational basis states.
    #[default]
    Full,
    /// Two states per qubit; the matrix is the tensor product of the
    /// per-qubit estimates.
    PerQubit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    pub n_qubits: usize,
    /// Row-major, `matrix[i][j] = P(read i | prepared j)`.
    pub matrix: Vec<Vec<f64>>,
    pub source: CalibrationSource,
}

impl CalibrationMatrix {
    pub fn exact(noise: &ReadoutNoise) -> Result<Self> {
        noise.validate()?;
        let dim = 1usize << noise.n_qubits();
        let mut matrix = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            for (i, p) in corrupt(&e, noise)?.into_iter().enumerate() {
                matrix[i][j] = p;
            }
        }
        Ok(CalibrationMatrix {
            n_qubits: noise.n_qubits(),
            matrix,
            source: CalibrationSource::ExactTensor,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let matrix = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        CalibrationMatrix {
            n_qubits,
            matrix,
            source: CalibrationSource::ExactTensor,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.matrix[i][j])
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.matrix.iter().map(|row| row[j]).sum()).collect()
    }
}

/// Estimates the calibration matrix by sampling each prepared basis state.
pub fn calibrate(noise: &ReadoutNoise, shots_per_state: u64, seed: u64) -> Result<CalibrationMatrix> {
    calibrate_with(noise, shots_per_state, seed, CalibrationScope::Full, Parallelism::default())
}

pub fn calibrate_with(
    noise: &ReadoutNoise,
    shots_per_state: u64,
    seed: u64,
    scope: CalibrationScope,
    parallelism: Parallelism,
) -> Result<CalibrationMatrix> {
    noise.validate()?;
    if shots_per_state < 1 {
        return Err(Error::invalid("shots_per_state", "must be at least 1"));
    }
    let n = noise.n_qubits();
    let dim = 1usize << n;
    let source = CalibrationSource::Estimated {
        shots: shots_per_state,
        seed,
    };
    // stream j ↔ prepared basis state j
    let histogram = |prepared: usize| -> Vec<u64> {
        let mut e = vec![0.0; dim];
        e[prepared] = 1.0;
        let probs = corrupt(&e, noise).expect("validated channel on a basis state");
        sample_counts(&probs, shots_per_state, &mut stream_rng(seed, 0, prepared as u64))
    };
    let matrix = match scope {
        CalibrationScope::Full => {
            let columns = map_indexed(dim, parallelism, histogram);
            (0..dim)
                .map(|i| (0..dim).map(|j| columns[j][i] as f64 / shots_per_state as f64).collect())
                .collect()
        }
        CalibrationScope::PerQubit => {
            let per_qubit = map_indexed(n, parallelism, |q| {
                let bit = 1usize << q;
                let marginal_one = |counts: &[u64]| -> u64 {
                    counts.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, c)| c).sum()
                };
                let ones_given_zero = marginal_one(&histogram(0));
                let ones_given_one = marginal_one(&histogram(bit));
                let s = shots_per_state as f64;
                QubitReadout {
                    p01: (ones_given_zero as f64 / s).min(0.5),
                    p10: ((shots_per_state - ones_given_one) as f64 / s).min(0.5),
                }
            });
            let mut cal = CalibrationMatrix::exact(&ReadoutNoise { per_qubit })?;
            cal.source = source;
            return Ok(cal);
        }
    };
    Ok(CalibrationMatrix { n_qubits: n, matrix, source })
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Minimizes `‖A·x − p̂‖₂` over the probability simplex, `p̂` the normalized
/// histogram.
///
/// When the unconstrained solution is already a distribution it is returned
/// directly. Otherwise accelerated projected gradient runs from its
/// projection, followed by an exact equality-constrained solve on the
/// detected support.
pub fn mitigate(raw_counts: &[u64], cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    let total: u64 = raw_counts.iter().sum();
    if total < 1 {
        return Err(Error::invalid("raw_counts", "histogram is empty"));
    }
    let p: Vec<f64> = raw_counts.iter().map(|&c| c as f64 / total as f64).collect();
    mitigate_distribution(&p, cal)
}

/// [`mitigate`] on an already normalized outcome distribution.
pub fn mitigate_distribution(p_hat: &[f64], cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    let d = cal.dim();
    if p_hat.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: p_hat.len() });
    }
    let a = cal.to_dmatrix();
    let p = DVector::from_column_slice(p_hat);
    let lu = a.clone().lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::SingularCalibration);
    }
    let x = lu.solve(&p).ok_or(Error::SingularCalibration)?;
    if x.iter().all(|&v| v >= 0.0) {
        let s: f64 = x.iter().sum();
        return Ok(x.iter().map(|v| v / s).collect());
    }

    let ata = a.transpose() * &a;
    let atp = a.transpose() * &p;
    let lipschitz = SymmetricEigen::new(ata.clone()).eigenvalues.max().max(1e-300);
    let mut xk = DVector::from_vec(project_to_simplex(x.as_slice()));
    let mut yk = xk.clone();
    let mut t = 1.0_f64;
    for _ in 0..20_000 {
        let grad = &ata * &yk - &atp;
        let step = &yk - grad / lipschitz;
        let next = DVector::from_vec(project_to_simplex(step.as_slice()));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        yk = &next + (&next - &xk) * ((t - 1.0) / t_next);
        let moved = (&next - &xk).amax();
        xk = next;
        t = t_next;
        if moved < 1e-16 {
            break;
        }
    }
    Ok(polish_on_support(&ata, &atp, xk).as_slice().to_vec())
}

/// Solves the KKT system on the support of `x` and keeps the result if it
/// is feasible and optimal.
fn polish_on_support(ata: &DMatrix<f64>, atp: &DVector<f64>, x: DVector<f64>) -> DVector<f64> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-12).collect();
    let s = support.len();
    let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
    let mut rhs = DVector::<f64>::zeros(s + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            kkt[(r, c)] = ata[(i, j)];
        }
        kkt[(r, s)] = 1.0;
        kkt[(s, r)] = 1.0;
        rhs[r] = atp[i];
    }
    rhs[s] = 1.0;
    let Some(sol) = kkt.lu().solve(&rhs) else {
        return x;
    };
    let mut y = DVector::<f64>::zeros(x.len());
    for (r, &i) in support.iter().enumerate() {
        if sol[r] < 0.0 {
            return x;
        }
        y[i] = sol[r];
    }
    // gradient + μ must be non-negative off the support
    let mu = -sol[s];
    let grad = ata * &y - atp;
    let scale = atp.amax().max(1e-300);
    if (0..x.len()).filter(|i| !support.contains(i)).any(|i| grad[i] - mu < -1e-10 * scale) {
        return x;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn corrupt_examples() {
        let clean = ReadoutNoise::uniform(1, 0.0).unwrap();
        assert!(close(&corrupt(&[0.3, 0.7], &clean).unwrap(), &[0.3, 0.7], 1e-15));
        let one = ReadoutNoise::uniform(1, 0.1).unwrap();
        assert!(close(&corrupt(&[1.0, 0.0], &one).unwrap(), &[0.9, 0.1], 1e-15));
        let two = ReadoutNoise::uniform(2, 0.1).unwrap();
        let out = corrupt(&[1.0, 0.0, 0.0, 0.0], &two).unwrap();
        assert!(close(&out, &[0.81, 0.09, 0.09, 0.01], 1e-15));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corrupt_rejects_bad_input() {
        let n = ReadoutNoise::uniform(1, 0.1).unwrap();
        assert!(corrupt(&[0.5, 0.4], &n).is_err());
        assert!(corrupt(&[0.5, 0.25, 0.25], &n).is_err());
        assert!(ReadoutNoise::uniform(1, 0.6).is_err());
    }

    #[test]
    fn noiseless_calibration_is_identity() {
        let n = ReadoutNoise::uniform(2, 0.0).unwrap();
        let cal = calibrate(&n, 100, 3).unwrap();
        assert_eq!(cal.matrix, CalibrationMatrix::identity(2).matrix);
        assert_eq!(cal.source, CalibrationSource::Estimated { shots: 100, seed: 3 });
    }

    #[test]
    fn exact_calibration_one_qubit() {
        let cal = CalibrationMatrix::exact(&ReadoutNoise::uniform(1, 0.1).unwrap()).unwrap();
        assert!(close(&cal.matrix[0], &[0.9, 0.1], 1e-15));
        assert!(close(&cal.matrix[1], &[0.1, 0.9], 1e-15));
        assert!(cal.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn estimated_columns_sum_to_one_exactly() {
        let n = ReadoutNoise::new(vec![QubitReadout { p01: 0.02, p10: 0.07 }, QubitReadout { p01: 0.05, p10: 0.01 }]).unwrap();
        let cal = calibrate(&n, 1000, 11).unwrap();
        assert!(cal.column_sums().iter().all(|&s| s == 1.0));
        assert_eq!(cal, calibrate(&n, 1000, 11).unwrap());
        let seq = calibrate_with(&n, 1000, 11, CalibrationScope::Full, Parallelism::Sequential).unwrap();
        assert_eq!(cal, seq);
    }

    #[test]
    fn per_qubit_scope_is_a_tensor_product() {
        let n = ReadoutNoise::uniform(2, 0.1).unwrap();
        let cal = calibrate_with(&n, 20_000, 4, CalibrationScope::PerQubit, Parallelism::Sequential).unwrap();
        let exact = CalibrationMatrix::exact(&n).unwrap();
        for (r, e) in cal.matrix.iter().zip(&exact.matrix) {
            assert!(close(r, e, 0.01));
        }
        assert!(cal.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn identity_mitigation_returns_histogram() {
        let cal = CalibrationMatrix::identity(2);
        let out = mitigate(&[10, 30, 0, 60], &cal).unwrap();
        assert!(close(&out, &[0.1, 0.3, 0.0, 0.6], 1e-15));
    }

    #[test]
    fn exact_inversion_recovers_distribution() {
        let noise = ReadoutNoise::new(vec![QubitReadout { p01: 0.1, p10: 0.2 }, QubitReadout { p01: 0.05, p10: 0.3 }]).unwrap();
        let cal = CalibrationMatrix::exact(&noise).unwrap();
        for dist in [[0.25, 0.25, 0.25, 0.25], [1.0, 0.0, 0.0, 0.0], [0.0, 0.3, 0.0, 0.7]] {
            let noisy = corrupt(&dist, &noise).unwrap();
            let back = mitigate_distribution(&noisy, &cal).unwrap();
            assert!(close(&back, &dist, 1e-9), "{back:?} vs {dist:?}");
        }
    }

    #[test]
    fn infeasible_histogram_lands_on_simplex() {
        let cal = CalibrationMatrix::exact(&ReadoutNoise::uniform(2, 0.1).unwrap()).unwrap();
        // all counts on |00⟩: raw inversion gives negative entries
        let out = mitigate(&[1000, 0, 0, 0], &cal).unwrap();
        assert!(out.iter().all(|&v| v >= 0.0));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((out[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_calibration_guarded() {
        let cal = CalibrationMatrix {
            n_qubits: 1,
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            source: CalibrationSource::ExactTensor,
        };
        assert_eq!(mitigate(&[3, 1], &cal), Err(Error::SingularCalibration));
        assert!(mitigate(&[0, 0], &CalibrationMatrix::identity(1)).is_err());
    }

    #[test]
    fn simplex_projection() {
        assert!(close(&project_to_simplex(&[0.2, 0.3, 0.5]), &[0.2, 0.3, 0.5], 1e-15));
        assert!(close(&project_to_simplex(&[2.0, 0.0]), &[1.0, 0.0], 1e-15));
        assert!(close(&project_to_simplex(&[0.5, 0.5, -1.0]), &[0.5, 0.5, 0.0], 1e-15));
    }

    #[test]
    fn json_forms() {
        let n = ReadoutNoise::uniform(1, 0.03).unwrap();
        let text = serde_json::to_string(&n).unwrap();
        assert_eq!(text, r#"{"per_qubit":[{"p01":0.03,"p10":0.03}]}"#);
        assert_eq!(ReadoutNoise::from_json_str(&text).unwrap(), n);
        let cal = calibrate(&n, 10, 1).unwrap();
        let back: CalibrationMatrix = serde_json::from_str(&serde_json::to_string(&cal).unwrap()).unwrap();
        assert_eq!(back, cal);
    }
}
