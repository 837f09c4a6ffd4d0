//! The hybrid minimization loop: prepare `|ψ(θ)⟩`, estimate `⟨H⟩`, hand the
//! estimate to a classical optimizer, repeat.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{generators, param_count, prepare, synthesize_params, AnsatzParams, Generator, StateVector};
use crate::encoding::EncodingKind;
use crate::error::{Error, Result};
use crate::estimator::{expectation_exact, Estimator, EstimatorConfig, EstimatorMode, ShotEstimate};
use crate::optim::{NelderMead, NelderMeadConfig, Spsa, SpsaConfig};
use crate::pauli::{reconstruct, strip_identity, PauliSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMethod {
    Spsa,
    NelderMead,
    /// Gradient descent on parameter-shift gradients with backtracking.
    ParameterShift,
}

impl std::str::FromStr for OptimizerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spsa" => Ok(OptimizerMethod::Spsa),
            "neldermead" | "nelder-mead" => Ok(OptimizerMethod::NelderMead),
            "pshift" | "parametershift" => Ok(OptimizerMethod::ParameterShift),
            other => Err(Error::Parse(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    /// Consecutive sub-tolerance iterations required to declare convergence.
    pub patience: usize,
    pub seed: u64,
    pub spsa: SpsaConfig,
    pub nelder_mead: NelderMeadConfig,
    /// Descent step for the parameter-shift method; `None` uses
    /// `1 / Σ|h_P|`, which bounds the curvature of every angle.
    pub learning_rate: Option<f64>,
}

impl OptimizerConfig {
    /// Defaults for an estimator mode: Nelder–Mead with tol 1e-6 when exact,
    /// SPSA with tol 1e-3 when sampled.
    pub fn for_mode(mode: EstimatorMode) -> Self {
        // Nelder–Mead needs about 200 iterations on the 9-parameter compact ansatz
        let (method, tol, max_iterations) = match mode {
            EstimatorMode::Exact => (OptimizerMethod::NelderMead, 1e-6, 200),
            EstimatorMode::Sampled => (OptimizerMethod::Spsa, 1e-3, 100),
        };
        OptimizerConfig {
            method,
            max_iterations,
            convergence_tol: tol,
            patience: 10,
            seed: 0,
            spsa: SpsaConfig::default(),
            nelder_mead: NelderMeadConfig::default(),
            learning_rate: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::invalid("convergence_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub params: AnsatzParams,
    pub energy: ShotEstimate,
    /// Every shot spent during this iteration, probes included.
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub index: usize,
    pub params: AnsatzParams,
    pub energy: ShotEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeTrace {
    pub iterations: Vec<IterationRecord>,
    pub best: BestRecord,
    pub total_shots: u64,
    pub converged: bool,
}

impl VqeTrace {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("trace has at least the initial record")
    }

    /// `iteration,energy,std_error,shots,p0,p1,…`
    pub fn to_csv(&self) -> String {
        let n = self.iterations.first().map_or(0, |r| r.params.len());
        let mut out = String::from("iteration,energy,std_error,shots");
        for k in 0..n {
            out.push_str(&format!(",p{k}"));
        }
        out.push('\n');
        for r in &self.iterations {
            out.push_str(&format!("{},{},{},{}", r.index, r.energy.value, r.energy.std_error, r.shots));
            for v in &r.params.values {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Starting angles: the uniform one-hot superposition for direct, zeros for
/// compact.
pub fn default_initial_params(encoding: EncodingKind, n_qubits: usize) -> Result<AnsatzParams> {
    match encoding {
        EncodingKind::Direct => {
            let amp = Complex64::new(1.0 / (n_qubits as f64).sqrt(), 0.0);
            let modes = vec![amp; n_qubits];
            synthesize_params(&StateVector::from_modes(&modes, encoding)?, encoding)
        }
        EncodingKind::Compact => AnsatzParams::zeros(encoding, n_qubits),
    }
}

/// Energy oracle shared by the optimizers: every call consumes a fresh
/// estimator round and is remembered so the trace can report the estimate
/// behind any probed point.
struct Objective<'a> {
    op: &'a PauliSum,
    encoding: EncodingKind,
    estimator: Estimator,
    round: u64,
    shots: u64,
    seen: HashMap<Vec<u64>, ShotEstimate>,
    failure: Option<Error>,
}

impl<'a> Objective<'a> {
    fn key(x: &[f64]) -> Vec<u64> {
        x.iter().map(|v| v.to_bits()).collect()
    }

    fn estimate(&mut self, x: &[f64]) -> Result<ShotEstimate> {
        let state = prepare(self.op.n_qubits(), &AnsatzParams::new(self.encoding, x.to_vec()))?;
        let est = self.estimator.estimate(&state, self.op, self.round, true)?;
        self.round += 1;
        self.shots += est.shots_used;
        self.seen.insert(Self::key(x), est.clone());
        Ok(est)
    }

    /// Scalar view for optimizers; failures surface as NaN and are kept.
    fn value(&mut self, x: &[f64]) -> f64 {
        match self.estimate(x) {
            Ok(e) => e.value,
            Err(err) => {
                self.failure.get_or_insert(err);
                f64::NAN
            }
        }
    }

    fn lookup_or_estimate(&mut self, x: &[f64]) -> Result<ShotEstimate> {
        match self.seen.get(&Self::key(x)) {
            Some(e) => Ok(e.clone()),
            None => self.estimate(x),
        }
    }
}

struct TraceBuilder {
    records: Vec<IterationRecord>,
    shots_mark: u64,
    quiet: usize,
    patience: usize,
    tol: f64,
}

impl TraceBuilder {
    /// Appends a record; returns true once the convergence window is full.
    fn push(&mut self, params: AnsatzParams, energy: ShotEstimate, shots_now: u64, change_hint: Option<f64>) -> Result<bool> {
        let index = self.records.len();
        if !energy.value.is_finite() {
            return Err(Error::NonFinite(index));
        }
        let change = self.records.last().map(|prev| {
            let prev = prev.energy.value;
            let step = (energy.value - prev).abs();
            let step = change_hint.map_or(step, |h| step.max(h));
            step / prev.abs().max(f64::MIN_POSITIVE)
        });
        self.quiet = match change {
            Some(c) if c < self.tol => self.quiet + 1,
            _ => 0,
        };
        self.records.push(IterationRecord {
            index,
            params,
            energy,
            shots: shots_now - self.shots_mark,
        });
        self.shots_mark = shots_now;
        Ok(self.quiet >= self.patience)
    }

    fn finish(self, converged: bool) -> VqeTrace {
        let best = self
            .records
            .iter()
            .min_by(|a, b| a.energy.value.total_cmp(&b.energy.value))
            .map(|r| BestRecord {
                index: r.index,
                params: r.params.clone(),
                energy: r.energy.clone(),
            })
            .expect("at least one record");
        let total_shots = self.records.iter().map(|r| r.shots).sum();
        VqeTrace {
            iterations: self.records,
            best,
            total_shots,
            converged,
        }
    }
}

/// Runs the variational loop.
///
/// Record 0 holds the initial point; each later record is one optimizer
/// iteration. Convergence means the relative energy change stayed below
/// `convergence_tol` for `patience` consecutive iterations (for Nelder–Mead
/// the simplex value spread also has to be that small).
pub fn vqe_minimize(
    op: &PauliSum,
    encoding: EncodingKind,
    est: &EstimatorConfig,
    opt: &OptimizerConfig,
    initial: Option<AnsatzParams>,
) -> Result<VqeTrace> {
    opt.validate()?;
    let n_qubits = op.n_qubits();
    let n_params = param_count(encoding, n_qubits)?;
    let init = match initial {
        Some(p) => {
            if p.encoding != encoding || p.len() != n_params {
                return Err(Error::ParamCount {
                    expected: n_params,
                    found: p.len(),
                });
            }
            p
        }
        None => default_initial_params(encoding, n_qubits)?,
    };
    let mut obj = Objective {
        op,
        encoding,
        estimator: Estimator::new(est.clone())?,
        round: 0,
        shots: 0,
        seen: HashMap::new(),
        failure: None,
    };
    let mut trace = TraceBuilder {
        records: Vec::new(),
        shots_mark: 0,
        quiet: 0,
        patience: opt.patience.max(1),
        tol: opt.convergence_tol,
    };
    let params = |x: &[f64]| AnsatzParams::new(encoding, x.to_vec());
    let mut converged = false;

    match opt.method {
        OptimizerMethod::NelderMead => {
            let mut f = |x: &[f64]| obj.value(x);
            let mut nm = NelderMead::new(&mut f, init.values.clone(), opt.nelder_mead);
            let (x0, _) = nm.best();
            let x0 = x0.to_vec();
            if let Some(e) = obj.failure.take() {
                return Err(e);
            }
            let e0 = obj.lookup_or_estimate(&x0)?;
            trace.push(params(&x0), e0, obj.shots, None)?;
            for _ in 0..opt.max_iterations {
                let mut f = |x: &[f64]| obj.value(x);
                nm.step(&mut f);
                if let Some(e) = obj.failure.take() {
                    return Err(e);
                }
                let x = nm.best().0.to_vec();
                let e = obj.lookup_or_estimate(&x)?;
                if trace.push(params(&x), e, obj.shots, Some(nm.value_spread()))? {
                    converged = true;
                    break;
                }
            }
        }
        OptimizerMethod::Spsa => {
            let mut f = |x: &[f64]| obj.value(x);
            let mut spsa = Spsa::new(&mut f, init.values.clone(), opt.spsa, opt.seed);
            if let Some(e) = obj.failure.take() {
                return Err(e);
            }
            let e0 = obj.estimate(&init.values)?;
            trace.push(init.clone(), e0, obj.shots, None)?;
            for _ in 0..opt.max_iterations {
                let mut f = |x: &[f64]| obj.value(x);
                spsa.step(&mut f);
                if let Some(e) = obj.failure.take() {
                    return Err(e);
                }
                let x = spsa.theta().to_vec();
                let e = obj.estimate(&x)?;
                if trace.push(params(&x), e, obj.shots, None)? {
                    converged = true;
                    break;
                }
            }
        }
        OptimizerMethod::ParameterShift => {
            let gens = generators(encoding, n_qubits)?;
            // The identity coefficient shifts energies without adding curvature.
            let curvature = op.weight_norm() - strip_identity(op).0.abs();
            let lr0 = opt.learning_rate.unwrap_or_else(|| 1.0 / curvature.max(f64::MIN_POSITIVE));
            // Energies this close are equal up to summation roundoff.
            let tie = 16.0 * f64::EPSILON * op.weight_norm();
            let mut x = init.values.clone();
            let mut current = obj.estimate(&x)?;
            trace.push(init.clone(), current.clone(), obj.shots, None)?;
            let mut recent = vec![current.value];
            let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
            for _ in 0..opt.max_iterations {
                let grad = {
                    let mut f = |y: &[f64]| obj.value(y);
                    shift_rule_gradient(&mut f, &x, &gens)
                };
                if let Some(e) = obj.failure.take() {
                    return Err(e);
                }
                // Barzilai–Borwein step from the last move; it needs only
                // gradients, which stay accurate after energies flatten out.
                let mut lr = match &prev {
                    Some((px, pg)) if opt.learning_rate.is_none() => {
                        let (mut ss, mut sy) = (0.0, 0.0);
                        for k in 0..x.len() {
                            let (sk, yk) = (x[k] - px[k], grad[k] - pg[k]);
                            ss += sk * sk;
                            sy += sk * yk;
                        }
                        if sy > 0.0 { (ss / sy).clamp(lr0 * 1e-3, lr0 * 1e4) } else { lr0 }
                    }
                    _ => lr0,
                };
                // Non-monotone backtracking against the worst of the last few
                // energies; sampled estimates take the first step.
                let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut next;
                let mut cand;
                let mut tries = 0;
                loop {
                    cand = x.iter().zip(&grad).map(|(v, g)| v - lr * g).collect::<Vec<f64>>();
                    next = obj.estimate(&cand)?;
                    if est.mode == EstimatorMode::Sampled || next.value <= reference + tie || tries >= 30 {
                        break;
                    }
                    lr *= 0.5;
                    tries += 1;
                }
                prev = Some((std::mem::replace(&mut x, cand), grad));
                current = next;
                recent.push(current.value);
                if recent.len() > 10 {
                    recent.remove(0);
                }
                if trace.push(params(&x), current.clone(), obj.shots, None)? {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(trace.finish(converged))
}

/// Four-term coefficients for a generator with eigenvalues {0, ±1/2}.
const D_PLUS: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
const D_MINUS: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);

/// Parameter-shift gradient of an arbitrary energy function.
///
/// Single-qubit generators use `(E(θ+π/2) − E(θ−π/2)) / 2`. Controlled
/// rotations carry two frequencies (1/2 and 1), so they use the four-term
/// rule with shifts `π/2` and `3π/2`.
pub fn shift_rule_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], gens: &[Generator]) -> Vec<f64> {
    let mut shifted = |k: usize, s: f64| {
        let mut y = x.to_vec();
        y[k] += s;
        f(&y)
    };
    (0..x.len())
        .map(|k| match gens[k] {
            Generator::SingleQubit => (shifted(k, FRAC_PI_2) - shifted(k, -FRAC_PI_2)) / 2.0,
            Generator::Controlled => {
                let near = shifted(k, FRAC_PI_2) - shifted(k, -FRAC_PI_2);
                let far = shifted(k, 3.0 * FRAC_PI_2) - shifted(k, -3.0 * FRAC_PI_2);
                D_PLUS * near - D_MINUS * far
            }
        })
        .collect()
}

/// Exact-mode gradient of `⟨ψ(θ)|op|ψ(θ)⟩` by parameter shifts.
pub fn parameter_shift_gradient(op: &PauliSum, encoding: EncodingKind, params: &AnsatzParams) -> Result<Vec<f64>> {
    let n = op.n_qubits();
    let expected = param_count(encoding, n)?;
    if params.len() != expected {
        return Err(Error::ParamCount {
            expected,
            found: params.len(),
        });
    }
    let gens = generators(encoding, n)?;
    let mut failure = None;
    let mut f = |x: &[f64]| match prepare(n, &AnsatzParams::new(encoding, x.to_vec())).and_then(|s| expectation_exact(&s, op)) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let g = shift_rule_gradient(&mut f, &params.values, &gens);
    match failure {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

/// Exact energy of the ansatz at `params`.
pub fn ansatz_energy(op: &PauliSum, params: &AnsatzParams) -> Result<f64> {
    expectation_exact(&prepare(op.n_qubits(), params)?, op)
}

/// Lowest eigenvalue of the full qubit operator.
pub fn lowest_eigenvalue(op: &PauliSum) -> f64 {
    reconstruct(op).eigenvalues()[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_compact, encode_direct, ModeOperator};
    use crate::units::Unit;

    fn pion() -> ModeOperator {
        ModeOperator::from_real_rows(
            &[
                &[640323.0, 139872.0, -139872.0, -107450.0],
                &[139872.0, 346707.0, 174794.0, 139872.0],
                &[-139872.0, 174794.0, 346707.0, -139872.0],
                &[-107450.0, 139872.0, -139872.0, 640323.0],
            ],
            Unit::MeV2,
        )
        .unwrap()
    }

    #[test]
    fn single_qubit_z_minimum() {
        let op = PauliSum::from_terms(1, [("Z".parse().unwrap(), 1.0)]).unwrap();
        let mut opt = OptimizerConfig::for_mode(EstimatorMode::Exact);
        opt.max_iterations = 300;
        let trace = vqe_minimize(&op, EncodingKind::Compact, &EstimatorConfig::exact(), &opt, None).unwrap();
        assert!((trace.best.energy.value + 1.0).abs() < 1e-6, "{}", trace.best.energy.value);
    }

    #[test]
    fn compact_pion_nelder_mead() {
        let op = encode_compact(&pion());
        let lambda = pion().matrix().eigenvalues()[0];
        let mut opt = OptimizerConfig::for_mode(EstimatorMode::Exact);
        opt.max_iterations = 200;
        let trace = vqe_minimize(&op, EncodingKind::Compact, &EstimatorConfig::exact(), &opt, None).unwrap();
        let rel = (trace.best.energy.value - lambda).abs() / lambda;
        assert!(rel < 1e-3, "rel err {rel}");
    }

    #[test]
    fn trace_well_formed_and_variational() {
        let op = encode_direct(&pion());
        let lambda = lowest_eigenvalue(&op);
        for method in [OptimizerMethod::NelderMead, OptimizerMethod::ParameterShift, OptimizerMethod::Spsa] {
            let mut opt = OptimizerConfig::for_mode(EstimatorMode::Exact);
            opt.method = method;
            opt.max_iterations = 60;
            let trace = vqe_minimize(&op, EncodingKind::Direct, &EstimatorConfig::exact(), &opt, None).unwrap();
            let min = trace.iterations.iter().map(|r| r.energy.value).fold(f64::INFINITY, f64::min);
            assert_eq!(trace.best.energy.value, min);
            assert_eq!(trace.total_shots, 0);
            for r in &trace.iterations {
                assert!(r.energy.value >= lambda - 1e-8);
            }
            for (k, r) in trace.iterations.iter().enumerate() {
                assert_eq!(r.index, k);
            }
        }
    }

    #[test]
    fn sampled_trace_counts_shots() {
        let op = encode_compact(&pion());
        let mut opt = OptimizerConfig::for_mode(EstimatorMode::Sampled);
        opt.max_iterations = 5;
        let est = EstimatorConfig::sampled(256, 3);
        let trace = vqe_minimize(&op, EncodingKind::Compact, &est, &opt, None).unwrap();
        assert_eq!(trace.iterations.len(), 6);
        assert_eq!(trace.total_shots, trace.iterations.iter().map(|r| r.shots).sum::<u64>());
        // 5 non-identity terms: 10 calibration probe pairs + 1 initial, then 3 per step
        assert_eq!(trace.iterations[0].shots, 21 * 5 * 256);
        assert_eq!(trace.iterations[1].shots, 3 * 5 * 256);
        let again = vqe_minimize(&op, EncodingKind::Compact, &est, &opt, None).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn constant_operator_has_zero_gradient() {
        let op = PauliSum::from_terms(2, [("II".parse().unwrap(), 5.0)]).unwrap();
        let p = AnsatzParams::new(EncodingKind::Compact, (0..9).map(|k| 0.3 * k as f64).collect());
        assert!(parameter_shift_gradient(&op, EncodingKind::Compact, &p).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn bad_initial_params_rejected() {
        let op = encode_compact(&pion());
        let opt = OptimizerConfig::for_mode(EstimatorMode::Exact);
        let r = vqe_minimize(&op, EncodingKind::Compact, &EstimatorConfig::exact(), &opt, Some(AnsatzParams::new(EncodingKind::Compact, vec![0.0; 3])));
        assert_eq!(r, Err(Error::ParamCount { expected: 9, found: 3 }));
        let three = PauliSum::from_terms(3, [("ZII".parse().unwrap(), 1.0)]).unwrap();
        assert!(vqe_minimize(&three, EncodingKind::Direct, &EstimatorConfig::exact(), &opt, None).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let op = encode_compact(&pion());
        let mut opt = OptimizerConfig::for_mode(EstimatorMode::Exact);
        opt.max_iterations = 3;
        let trace = vqe_minimize(&op, EncodingKind::Compact, &EstimatorConfig::exact(), &opt, None).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iteration,energy,std_error,shots,p0,p1,p2,p3,p4,p5,p6,p7,p8");
        assert_eq!(lines.count(), trace.iterations.len());
    }
}
