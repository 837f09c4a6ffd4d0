//! The pion valence Hamiltonian, ground-state observables, form-factor scans
//! and the charge radius.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::StateVector;
use crate::encoding::{qubit_count, try_encode, EncodingKind, ModeOperator, ModeOperatorFile};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorConfig, ShotEstimate};
use crate::exec::try_map_indexed;
use crate::units::{convert_units, Unit};

/// Valence-sector mass-squared operator with its model parameters attached.
#[derive(Debug, Clone, PartialEq)]
pub struct BLFQHamiltonian {
    pub matrix: ModeOperator,
    pub quark_mass_mev: f64,
    pub kappa_mev: f64,
    pub coupling_inv_gev2: f64,
}

const PION_ROWS: [[f64; 4]; 4] = [
    [640323.0, 139872.0, -139872.0, -107450.0],
    [139872.0, 346707.0, 174794.0, 139872.0],
    [-139872.0, 174794.0, 346707.0, -139872.0],
    [-107450.0, 139872.0, -139872.0, 640323.0],
];

/// The 4×4 pion Hamiltonian in MeV².
pub fn pion_hamiltonian() -> BLFQHamiltonian {
    let rows: Vec<&[f64]> = PION_ROWS.iter().map(|r| r.as_slice()).collect();
    BLFQHamiltonian {
        matrix: ModeOperator::from_real_rows(&rows, Unit::MeV2).expect("symmetric literal"),
        quark_mass_mev: 337.01,
        kappa_mev: 227.00,
        coupling_inv_gev2: 250.785,
    }
}

/// Lowest eigenvalue of a mode operator and its eigenvector placed on the
/// encoding's basis states.
pub fn exact_ground_state(op: &ModeOperator, encoding: EncodingKind) -> Result<(f64, StateVector)> {
    let (lambda, v) = op.matrix().ground_state();
    let modes: Vec<_> = v.iter().copied().collect();
    Ok((lambda, StateVector::from_modes(&modes, encoding)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    pub name: String,
    pub operator: ModeOperator,
    pub include_constant: bool,
    pub units: Unit,
}

#[derive(Serialize, Deserialize)]
struct ObservableFile {
    name: String,
    units: Unit,
    #[serde(default = "default_true")]
    include_constant: bool,
    #[serde(default)]
    n_modes: Option<usize>,
    entries: Vec<[f64; 2]>,
}

fn default_true() -> bool {
    true
}

/// Side length of a flat row-major square matrix.
fn side(len: usize, declared: Option<usize>) -> Result<usize> {
    let n = declared.unwrap_or_else(|| (len as f64).sqrt().round() as usize);
    if n == 0 || n * n != len {
        return Err(Error::invalid("entries", format!("{len} entries do not form a square matrix")));
    }
    Ok(n)
}

impl ObservableSpec {
    pub fn new(name: impl Into<String>, operator: ModeOperator, include_constant: bool) -> Self {
        let units = operator.units();
        ObservableSpec {
            name: name.into(),
            operator,
            include_constant,
            units,
        }
    }

    /// Parses `{"name", "units", "include_constant", "entries": [[re, im], …]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: ObservableFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let n = side(f.entries.len(), f.n_modes)?;
        let operator = ModeOperator::try_from(ModeOperatorFile {
            n_modes: n,
            units: f.units,
            entries: f.entries,
        })?;
        Ok(ObservableSpec {
            name: f.name,
            operator,
            include_constant: f.include_constant,
            units: f.units,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = ModeOperatorFile::from(&self.operator);
        serde_json::to_value(ObservableFile {
            name: self.name.clone(),
            units: self.units,
            include_constant: self.include_constant,
            n_modes: Some(file.n_modes),
            entries: file.entries,
        })
        .expect("plain data")
    }
}

fn check_state(state: &StateVector, n_modes: usize, encoding: EncodingKind) -> Result<()> {
    let expected = qubit_count(encoding, n_modes);
    if state.n_qubits() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: state.n_qubits(),
        });
    }
    Ok(())
}

/// `⟨ψ|O|ψ⟩` for a mode-space observable under an encoding.
///
/// The identity coefficient of the encoded operator is never sampled; it is
/// added back iff `include_constant`, and is always available in
/// `ShotEstimate::constant`.
pub fn evaluate_observable(state: &StateVector, spec: &ObservableSpec, encoding: EncodingKind, est: &EstimatorConfig) -> Result<ShotEstimate> {
    check_state(state, spec.operator.n_modes(), encoding)?;
    let op = try_encode(&spec.operator, encoding)?;
    Estimator::new(est.clone())?.estimate(state, &op, 0, spec.include_constant)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    /// Momentum transfer squared, GeV².
    pub q2: f64,
    pub operator: ModeOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorScan {
    pub points: Vec<ScanPoint>,
    /// Divisor for every point; `None` uses the `Q² = 0` expectation.
    pub normalization: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScanFilePoint {
    q2: f64,
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ScanFile {
    #[serde(default)]
    units: Option<Unit>,
    #[serde(default)]
    normalization: Option<f64>,
    points: Vec<ScanFilePoint>,
}

impl FormFactorScan {
    pub fn new(points: Vec<ScanPoint>, normalization: Option<f64>) -> Result<Self> {
        let scan = FormFactorScan { points, normalization };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.points.first().ok_or_else(|| Error::invalid("points", "scan is empty"))?;
        if first.q2 != 0.0 {
            return Err(Error::invalid("points", "first point must be at Q² = 0"));
        }
        if self.points.windows(2).any(|w| w[1].q2.is_nan() || w[1].q2 <= w[0].q2) {
            return Err(Error::invalid("points", "Q² values must be strictly increasing"));
        }
        let n = first.operator.n_modes();
        if let Some(p) = self.points.iter().find(|p| p.operator.n_modes() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.operator.n_modes(),
            });
        }
        if self.normalization == Some(0.0) {
            return Err(Error::ZeroNormalization);
        }
        Ok(())
    }

    /// Parses `{"units", "normalization", "points": [{"q2", "entries"}, …]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: ScanFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let units = f.units.unwrap_or(Unit::Dimensionless);
        let points = f
            .points
            .into_iter()
            .map(|p| {
                let n = side(p.entries.len(), None)?;
                let operator = ModeOperator::try_from(ModeOperatorFile {
                    n_modes: n,
                    units,
                    entries: p.entries,
                })?;
                Ok(ScanPoint { q2: p.q2, operator })
            })
            .collect::<Result<Vec<_>>>()?;
        FormFactorScan::new(points, f.normalization)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = ScanFile {
            units: self.points.first().map(|p| p.operator.units()),
            normalization: self.normalization,
            points: self
                .points
                .iter()
                .map(|p| ScanFilePoint {
                    q2: p.q2,
                    entries: ModeOperatorFile::from(&p.operator).entries,
                })
                .collect(),
        };
        serde_json::to_value(file).expect("plain data")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactorPoint {
    pub q2: f64,
    pub f: f64,
    pub std_error: f64,
}

/// Evaluates `F(Q²) = ⟨ψ|O(Q²)|ψ⟩ / normalization` on every grid point.
///
/// Point `k` uses estimator round `k`. The standard error ignores the
/// uncertainty of an auto-computed normalization.
pub fn form_factor_scan(state: &StateVector, scan: &FormFactorScan, encoding: EncodingKind, est: &EstimatorConfig) -> Result<Vec<FormFactorPoint>> {
    scan.validate()?;
    check_state(state, scan.points[0].operator.n_modes(), encoding)?;
    let estimator = Estimator::new(est.clone())?;
    let raw = try_map_indexed(scan.points.len(), est.parallelism, |k| {
        let op = try_encode(&scan.points[k].operator, encoding)?;
        estimator.estimate(state, &op, k as u64, true)
    })?;
    let norm = scan.normalization.unwrap_or(raw[0].value);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNormalization);
    }
    Ok(scan
        .points
        .iter()
        .zip(&raw)
        .map(|(p, e)| FormFactorPoint {
            q2: p.q2,
            f: e.value / norm,
            std_error: e.std_error / norm.abs(),
        })
        .collect())
}

/// `Q2,F,std_error` rows.
pub fn scan_to_csv(points: &[FormFactorPoint]) -> String {
    let mut out = String::from("Q2,F,std_error\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.q2, p.f, p.std_error));
    }
    out
}

pub const DEFAULT_RADIUS_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeRadius {
    /// dF/dQ² at zero, GeV⁻².
    pub slope: f64,
    pub r2_fm2: f64,
    /// `None` when `r2_fm2` is negative.
    pub r_fm: Option<f64>,
    pub negative: bool,
}

/// `⟨r²⟩ = −6 dF/dQ²|₀` from a quadratic least-squares fit over the lowest
/// `window` points (Q² in GeV²).
pub fn charge_radius(points: &[FormFactorPoint], window: usize) -> Result<ChargeRadius> {
    if points.len() < 3 {
        return Err(Error::invalid("points", format!("need at least 3 points, got {}", points.len())));
    }
    if window < 3 || window > points.len() {
        return Err(Error::invalid("window", format!("must lie in 3..={}", points.len())));
    }
    if points[0].q2 != 0.0 {
        return Err(Error::invalid("points", "first point must be at Q² = 0"));
    }
    let pts = &points[..window];
    // Columns scaled by the largest Q² keep the Vandermonde system well conditioned.
    let scale = pts.iter().map(|p| p.q2.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::SingularFit);
    }
    let a = DMatrix::from_fn(window, 3, |r, c| (pts[r].q2 / scale).powi(c as i32));
    let b = DVector::from_iterator(window, pts.iter().map(|p| p.f));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::SingularFit);
    }
    let coef = svd.solve(&b, 0.0).map_err(|_| Error::SingularFit)?;
    let slope = coef[1] / scale;
    let r2_inv_gev2 = -6.0 * slope;
    let r2_fm2 = convert_units(r2_inv_gev2, Unit::InvGeV2, Unit::Fm2)?;
    let negative = r2_fm2 < 0.0;
    Ok(ChargeRadius {
        slope,
        r2_fm2,
        r_fm: (!negative).then(|| r2_fm2.sqrt()),
        negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HBAR_C_GEV_FM;
    use num_complex::Complex64;

    fn exact() -> EstimatorConfig {
        EstimatorConfig::exact()
    }

    fn profile(q2s: &[f64], f: impl Fn(f64) -> f64) -> Vec<FormFactorPoint> {
        q2s.iter().map(|&q2| FormFactorPoint { q2, f: f(q2), std_error: 0.0 }).collect()
    }

    #[test]
    fn pion_entries_and_mass() {
        let h = pion_hamiltonian();
        assert_eq!(h.matrix.get(0, 0).re, 640323.0);
        assert_eq!(h.matrix.get(0, 3).re, -107450.0);
        let diag: Vec<f64> = (0..4).map(|k| h.matrix.get(k, k).re).collect();
        assert_eq!(diag, vec![640323.0, 346707.0, 346707.0, 640323.0]);
        let lambda = h.matrix.matrix().eigenvalues()[0];
        assert!((lambda - 19481.997).abs() < 1e-2, "{lambda}");
        assert!((lambda.sqrt() - 139.6).abs() < 0.1);
    }

    #[test]
    fn ground_state_energy_with_and_without_constant() {
        let h = pion_hamiltonian();
        for enc in [EncodingKind::Direct, EncodingKind::Compact] {
            let (lambda, psi) = exact_ground_state(&h.matrix, enc).unwrap();
            let with = evaluate_observable(&psi, &ObservableSpec::new("m2", h.matrix.clone(), true), enc, &exact()).unwrap();
            assert!((with.value - lambda).abs() / lambda < 1e-8);
            assert_eq!(with.shots_used, 0);
            if enc == EncodingKind::Compact {
                let without = evaluate_observable(&psi, &ObservableSpec::new("m2", h.matrix.clone(), false), enc, &exact()).unwrap();
                assert!((without.value - (lambda - 493515.0)).abs() < 1e-6);
                assert!((without.value_with_constant() - with.value).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identity_observable_is_one_without_shots() {
        let id = ObservableSpec::new("norm", ModeOperator::identity(4, Unit::Dimensionless), true);
        let (_, psi) = exact_ground_state(&pion_hamiltonian().matrix, EncodingKind::Compact).unwrap();
        let e = evaluate_observable(&psi, &id, EncodingKind::Compact, &EstimatorConfig::sampled(8192, 1)).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.shots_used, 0);
    }

    #[test]
    fn wrong_register_size_rejected() {
        let spec = ObservableSpec::new("m2", pion_hamiltonian().matrix, true);
        let psi = StateVector::zero(3);
        assert!(matches!(
            evaluate_observable(&psi, &spec, EncodingKind::Compact, &exact()),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn constant_family_is_flat() {
        let pts = (0..5)
            .map(|k| ScanPoint {
                q2: 0.1 * k as f64,
                operator: ModeOperator::identity(4, Unit::Dimensionless),
            })
            .collect();
        let scan = FormFactorScan::new(pts, None).unwrap();
        let (_, psi) = exact_ground_state(&pion_hamiltonian().matrix, EncodingKind::Direct).unwrap();
        for p in form_factor_scan(&psi, &scan, EncodingKind::Direct, &exact()).unwrap() {
            assert_eq!(p.f, 1.0);
        }
    }

    #[test]
    fn linear_family_is_analytic() {
        let c = 2.5;
        let pts = (0..6)
            .map(|k| {
                let q2 = 0.05 * k as f64;
                ScanPoint {
                    q2,
                    operator: ModeOperator::identity(4, Unit::Dimensionless).scaled(1.0 - q2 * c),
                }
            })
            .collect();
        let scan = FormFactorScan::new(pts, None).unwrap();
        let (_, psi) = exact_ground_state(&pion_hamiltonian().matrix, EncodingKind::Compact).unwrap();
        let est = EstimatorConfig::sampled(1024, 4);
        for p in form_factor_scan(&psi, &scan, EncodingKind::Compact, &est).unwrap() {
            assert!((p.f - (1.0 - p.q2 * c)).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_family_matches_dense_oracle() {
        let h = pion_hamiltonian().matrix;
        let (_, psi) = exact_ground_state(&h, EncodingKind::Compact).unwrap();
        let modes = psi.mode_amplitudes(EncodingKind::Compact, 4);
        let v = DVector::from_vec(modes);
        let family: Vec<ScanPoint> = (0..4)
            .map(|k| {
                let q2 = 0.2 * k as f64;
                let m = DMatrix::from_fn(4, 4, |r, c| {
                    let base = 1.0 / (1.0 + (r + c) as f64 + q2);
                    Complex64::new(base, if r < c { 0.1 * q2 } else if r > c { -0.1 * q2 } else { 0.0 })
                });
                ScanPoint {
                    q2,
                    operator: ModeOperator::new(crate::pauli::HermitianMatrix::new(m, Unit::Dimensionless).unwrap()),
                }
            })
            .collect();
        let scan = FormFactorScan::new(family.clone(), None).unwrap();
        let res = form_factor_scan(&psi, &scan, EncodingKind::Compact, &exact()).unwrap();
        let dense = |p: &ScanPoint| (v.adjoint() * p.operator.matrix().entries() * &v)[(0, 0)].re;
        let norm = dense(&family[0]);
        for (r, p) in res.iter().zip(&family) {
            assert!((r.f - dense(p) / norm).abs() < 1e-10);
        }
        assert_eq!(res[0].f, 1.0);
    }

    #[test]
    fn scan_validation() {
        let id = || ModeOperator::identity(2, Unit::Dimensionless);
        assert!(FormFactorScan::new(vec![], None).is_err());
        assert!(FormFactorScan::new(vec![ScanPoint { q2: 0.1, operator: id() }], None).is_err());
        let dup = vec![ScanPoint { q2: 0.0, operator: id() }, ScanPoint { q2: 0.0, operator: id() }];
        assert!(FormFactorScan::new(dup, None).is_err());
        assert_eq!(FormFactorScan::new(vec![ScanPoint { q2: 0.0, operator: id() }], Some(0.0)), Err(Error::ZeroNormalization));
    }

    #[test]
    fn zero_normalization_detected() {
        let zero = ModeOperator::identity(4, Unit::Dimensionless).scaled(0.0);
        let scan = FormFactorScan::new(vec![ScanPoint { q2: 0.0, operator: zero }], None).unwrap();
        let (_, psi) = exact_ground_state(&pion_hamiltonian().matrix, EncodingKind::Compact).unwrap();
        assert_eq!(form_factor_scan(&psi, &scan, EncodingKind::Compact, &exact()), Err(Error::ZeroNormalization));
    }

    #[test]
    fn radius_from_linear_profile() {
        let r0: f64 = 1.24;
        // r0² in GeV⁻², by hand: 1.5376 fm² / ħc²
        let r0_sq_gev = r0 * r0 / (HBAR_C_GEV_FM * HBAR_C_GEV_FM);
        let pts = profile(&[0.0, 0.01, 0.02, 0.04, 0.08], |q2| 1.0 - q2 * r0_sq_gev / 6.0);
        let r = charge_radius(&pts, DEFAULT_RADIUS_WINDOW).unwrap();
        assert!((r.r_fm.unwrap() - r0).abs() / r0 < 1e-6);
        let r5 = charge_radius(&pts, 5).unwrap();
        assert!((r5.r_fm.unwrap() - r0).abs() / r0 < 1e-6);
    }

    #[test]
    fn radius_flat_and_quadratic() {
        let flat = charge_radius(&profile(&[0.0, 0.1, 0.2], |_| 1.0), 3).unwrap();
        assert!(flat.r2_fm2.abs() < 1e-14);
        let (a, b) = (3.7, 12.0);
        let quad = charge_radius(&profile(&[0.0, 0.05, 0.1, 0.5, 1.0], |q| 1.0 - a * q + b * q * q), 4).unwrap();
        assert!((quad.slope + a).abs() < 1e-8, "{}", quad.slope);
    }

    #[test]
    fn radius_errors_and_flags() {
        assert!(charge_radius(&profile(&[0.0, 0.1], |_| 1.0), 3).is_err());
        assert!(charge_radius(&profile(&[0.0, 0.1, 0.2], |_| 1.0), 4).is_err());
        let rising = charge_radius(&profile(&[0.0, 0.1, 0.2], |q| 1.0 + q), 3).unwrap();
        assert!(rising.negative && rising.r_fm.is_none() && rising.r2_fm2 < 0.0);
    }

    #[test]
    fn observable_json_round_trip() {
        let spec = ObservableSpec::new("m2", pion_hamiltonian().matrix, false);
        let text = spec.to_json().to_string();
        assert_eq!(ObservableSpec::from_json_str(&text).unwrap(), spec);
        let minimal = r#"{"name":"n","units":"1","entries":[[1,0],[0,0],[0,0],[1,0]]}"#;
        let parsed = ObservableSpec::from_json_str(minimal).unwrap();
        assert!(parsed.include_constant);
        assert_eq!(parsed.operator.n_modes(), 2);
        assert!(ObservableSpec::from_json_str(r#"{"name":"n","units":"1","entries":[[1,0],[0,0],[0,0]]}"#).is_err());
    }

    #[test]
    fn scan_json_round_trip() {
        let pts = (0..3)
            .map(|k| ScanPoint {
                q2: k as f64 * 0.1,
                operator: pion_hamiltonian().matrix.scaled(1.0 / (1.0 + k as f64)),
            })
            .collect();
        let scan = FormFactorScan::new(pts, Some(2.0)).unwrap();
        let back = FormFactorScan::from_json_str(&scan.to_json().to_string()).unwrap();
        assert_eq!(back, scan);
    }

    #[test]
    fn sampled_scan_within_error_bars() {
        let h = pion_hamiltonian().matrix;
        let (_, psi) = exact_ground_state(&h, EncodingKind::Compact).unwrap();
        let diag = ModeOperator::from_real_rows(
            &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.0], &[0.0, 0.0, 0.0, 1.0]],
            Unit::Dimensionless,
        )
        .unwrap();
        let pts = (0..3)
            .map(|k| ScanPoint {
                q2: k as f64 * 0.1,
                operator: diag.scaled(1.0 - 0.3 * k as f64),
            })
            .collect();
        let scan = FormFactorScan::new(pts, None).unwrap();
        let res = form_factor_scan(&psi, &scan, EncodingKind::Compact, &EstimatorConfig::sampled(8192, 11)).unwrap();
        assert_eq!(res[0].f, 1.0);
        for (k, p) in res.iter().enumerate() {
            let expected = 1.0 - 0.3 * k as f64;
            assert!((p.f - expected).abs() < 0.05, "{} vs {expected}", p.f);
        }
        assert!(res[1].std_error > 0.0);
    }
}
