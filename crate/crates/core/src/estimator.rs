//! Expectation values of Pauli sums, exact or by seeded shot sampling.
//!
//! `⟨ψ|H|ψ⟩ = Σ_P h_P ⟨ψ|P|ψ⟩`. The identity coefficient is always handled
//! classically. Every other term is measured on its own with
//! `shots_per_term` shots after rotating its support into the Z basis.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Mat2, StateVector};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Parallelism};
use crate::pauli::{strip_identity, Pauli, PauliSum, PauliTerm};
use crate::readout::{calibrate_with, corrupt, mitigate, CalibrationMatrix, CalibrationScope, ReadoutNoise};
use crate::sampling::{sample_counts, splitmix64, stream_rng};

pub const DEFAULT_SHOTS_PER_TERM: u64 = 8192;

/// Salt separating calibration streams from measurement streams.
const CALIBRATION_SALT: u64 = 0xCA11_B8A7_E000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub shots_per_term: u64,
    pub seed: u64,
    pub noise: Option<ReadoutNoise>,
    pub mitigation: bool,
    /// Shots per prepared state for the mitigation calibration; `None` uses
    /// the exact tensor-product matrix of `noise`.
    pub calibration_shots: Option<u64>,
    pub calibration_scope: CalibrationScope,
    pub parallelism: Parallelism,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Exact,
            shots_per_term: DEFAULT_SHOTS_PER_TERM,
            seed: 0,
            noise: None,
            mitigation: false,
            calibration_shots: None,
            calibration_scope: CalibrationScope::Full,
            parallelism: Parallelism::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn exact() -> Self {
        EstimatorConfig::default()
    }

    pub fn sampled(shots_per_term: u64, seed: u64) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Sampled,
            shots_per_term,
            seed,
            ..EstimatorConfig::default()
        }
    }

    pub fn with_noise(mut self, noise: ReadoutNoise, mitigation: bool) -> Self {
        self.noise = Some(noise);
        self.mitigation = mitigation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == EstimatorMode::Sampled && self.shots_per_term < 1 {
            return Err(Error::invalid("shots_per_term", "must be at least 1"));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if self.calibration_shots == Some(0) {
            return Err(Error::invalid("calibration_shots", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub coefficient: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    /// Reported value: the non-identity sum, plus `constant` when
    /// `constant_included` is set.
    pub value: f64,
    pub std_error: f64,
    pub shots_used: u64,
    pub constant: f64,
    pub constant_included: bool,
    pub per_term: BTreeMap<PauliTerm, TermEstimate>,
}

impl ShotEstimate {
    /// Σ h_P · mean_P over non-identity terms, in term order.
    pub fn measured_part(&self) -> f64 {
        self.per_term.values().map(|t| t.coefficient * t.mean).sum()
    }

    pub fn value_with_constant(&self) -> f64 {
        self.measured_part() + self.constant
    }

    pub fn value_without_constant(&self) -> f64 {
        self.measured_part()
    }

    fn assemble(constant: f64, include: bool, per_term: BTreeMap<PauliTerm, TermEstimate>, shots: u64) -> Self {
        let mut value = if include { constant } else { 0.0 };
        let mut var = 0.0;
        for t in per_term.values() {
            value += t.coefficient * t.mean;
            var += (t.coefficient * t.std_error).powi(2);
        }
        ShotEstimate {
            value,
            std_error: var.sqrt(),
            shots_used: shots,
            constant,
            constant_included: include,
            per_term,
        }
    }
}

/// `⟨ψ|P|ψ⟩` for one Pauli string.
pub fn term_expectation(state: &StateVector, term: &PauliTerm) -> f64 {
    let amps = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &a) in amps.iter().enumerate() {
        let (j, phase) = term.apply_to_basis(i);
        acc += amps[j].conj() * phase * a;
    }
    acc.re
}

/// Exact `⟨ψ|op|ψ⟩` from the amplitudes. The identity term counts as its
/// coefficient exactly, since states are normalized.
pub fn expectation_exact(state: &StateVector, op: &PauliSum) -> Result<f64> {
    check_qubits(state, op.n_qubits())?;
    Ok(op
        .iter()
        .map(|(t, c)| if t.is_identity() { c } else { c * term_expectation(state, t) })
        .sum())
}

fn check_qubits(state: &StateVector, n: usize) -> Result<()> {
    if state.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.n_qubits(),
        });
    }
    Ok(())
}

/// Maps the eigenbasis of `term`'s letters onto the computational basis.
fn rotate_to_z_basis(state: &StateVector, term: &PauliTerm) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let hadamard: Mat2 = [
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    ];
    // H·S†
    let y_rotation: Mat2 = [
        [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
    ];
    let mut rotated = state.clone();
    for (q, &p) in term.letters().iter().enumerate() {
        match p {
            Pauli::X => rotated.apply_block(q, 0, &hadamard),
            Pauli::Y => rotated.apply_block(q, 0, &y_rotation),
            Pauli::I | Pauli::Z => {}
        }
    }
    rotated
}

/// Outcome distribution of measuring `term` (before any readout noise).
pub fn measurement_distribution(state: &StateVector, term: &PauliTerm) -> Vec<f64> {
    rotate_to_z_basis(state, term).probabilities()
}

fn parity_sign(outcome: usize, support_mask: usize) -> f64 {
    if (outcome & support_mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Mean and standard error of the ±1 parity over a histogram.
fn histogram_stats(counts: &[u64], support_mask: usize) -> (f64, f64) {
    let shots: u64 = counts.iter().sum();
    let plus: u64 = counts
        .iter()
        .enumerate()
        .filter(|(i, _)| parity_sign(*i, support_mask) > 0.0)
        .map(|(_, c)| c)
        .sum();
    let n = shots as f64;
    let mean = (2.0 * plus as f64 - n) / n;
    if shots < 2 {
        return (mean, 0.0);
    }
    // Bessel-corrected variance of ±1 samples
    let var = (n / (n - 1.0)) * (1.0 - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Samples one Pauli term.
///
/// Every shot contributes `Π_{k ∈ support} (−1)^{bit_k}`; the mean is the
/// sample average and the error is `sample std / √shots`.
pub fn measure_term(
    state: &StateVector,
    term: &PauliTerm,
    shots: u64,
    seed: u64,
    noise: Option<&ReadoutNoise>,
) -> Result<(f64, f64)> {
    measure_term_with(state, term, shots, &mut stream_rng(seed, 0, 0), noise, None)
}

/// [`measure_term`] with an explicit RNG and optional mitigation.
pub fn measure_term_with(
    state: &StateVector,
    term: &PauliTerm,
    shots: u64,
    rng: &mut ChaCha8Rng,
    noise: Option<&ReadoutNoise>,
    calibration: Option<&CalibrationMatrix>,
) -> Result<(f64, f64)> {
    if term.is_identity() {
        return Err(Error::IdentityTerm);
    }
    if shots < 1 {
        return Err(Error::invalid("shots", "must be at least 1"));
    }
    check_qubits(state, term.n_qubits())?;
    let mut probs = measurement_distribution(state, term);
    if let Some(noise) = noise {
        if noise.n_qubits() != state.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: state.n_qubits(),
                found: noise.n_qubits(),
            });
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        probs = corrupt(&probs, noise)?;
    }
    let counts = sample_counts(&probs, shots, rng);
    let mask = term.z_mask() | term.x_mask();
    let (raw_mean, raw_se) = histogram_stats(&counts, mask);
    let Some(cal) = calibration else {
        return Ok((raw_mean, raw_se));
    };
    let dist = mitigate(&counts, cal)?;
    let mean: f64 = dist.iter().enumerate().map(|(i, p)| p * parity_sign(i, mask)).sum();
    // Inverting the channel stretches the parity by 1 / Π(1 − p01 − p10).
    let attenuation: f64 = noise
        .map(|n| term.support().map(|q| 1.0 - n.per_qubit[q].p01 - n.per_qubit[q].p10).product())
        .unwrap_or(1.0);
    Ok((mean, raw_se / attenuation.max(f64::EPSILON)))
}

/// An estimator bound to a configuration, with the mitigation calibration
/// computed once up front.
#[derive(Debug, Clone)]
pub struct Estimator {
    cfg: EstimatorConfig,
    calibration: Option<CalibrationMatrix>,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let calibration = match (&cfg.noise, cfg.mitigation, cfg.mode) {
            (Some(noise), true, EstimatorMode::Sampled) => Some(match cfg.calibration_shots {
                None => CalibrationMatrix::exact(noise)?,
                Some(shots) => calibrate_with(
                    noise,
                    shots,
                    splitmix64(cfg.seed ^ CALIBRATION_SALT),
                    cfg.calibration_scope,
                    cfg.parallelism,
                )?,
            }),
            _ => None,
        };
        Ok(Estimator { cfg, calibration })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn calibration(&self) -> Option<&CalibrationMatrix> {
        self.calibration.as_ref()
    }

    /// Estimates `⟨ψ|op|ψ⟩`. `round` separates the RNG streams of repeated
    /// evaluations under one seed; term `k` (in term order) of round `r`
    /// uses stream `(seed, r, k)`.
    pub fn estimate(&self, state: &StateVector, op: &PauliSum, round: u64, include_constant: bool) -> Result<ShotEstimate> {
        check_qubits(state, op.n_qubits())?;
        let (constant, rest) = strip_identity(op);
        let terms: Vec<(&PauliTerm, f64)> = rest.iter().collect();
        let cfg = &self.cfg;
        let (results, shots) = match cfg.mode {
            EstimatorMode::Exact => {
                let r: Vec<(f64, f64)> = terms.iter().map(|(t, _)| (term_expectation(state, t), 0.0)).collect();
                (r, 0)
            }
            EstimatorMode::Sampled => {
                if let Some(n) = &cfg.noise {
                    if n.n_qubits() != state.n_qubits() {
                        return Err(Error::DimensionMismatch {
                            expected: state.n_qubits(),
                            found: n.n_qubits(),
                        });
                    }
                }
                let r = try_map_indexed(terms.len(), cfg.parallelism, |k| {
                    let mut rng = stream_rng(cfg.seed, round, k as u64);
                    measure_term_with(
                        state,
                        terms[k].0,
                        cfg.shots_per_term,
                        &mut rng,
                        cfg.noise.as_ref(),
                        self.calibration.as_ref(),
                    )
                })?;
                (r, cfg.shots_per_term * terms.len() as u64)
            }
        };
        let per_term = terms
            .iter()
            .zip(results)
            .map(|((t, c), (mean, se))| {
                (
                    (*t).clone(),
                    TermEstimate {
                        coefficient: *c,
                        mean,
                        std_error: se,
                    },
                )
            })
            .collect();
        Ok(ShotEstimate::assemble(constant, include_constant, per_term, shots))
    }
}

/// One-off estimate including the constant term, round 0.
pub fn expectation_sampled(state: &StateVector, op: &PauliSum, cfg: &EstimatorConfig) -> Result<ShotEstimate> {
    Estimator::new(cfg.clone())?.estimate(state, op, 0, true)
}
