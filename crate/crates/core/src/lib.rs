//! Variational quantum eigensolver for small light-front valence Hamiltonians.
//!
//! The pipeline: a Hermitian mode-space operator is mapped to qubits
//! ([`encoding`]), decomposed into Pauli strings ([`pauli`]), evaluated on
//! ansatz states prepared by an exact statevector simulator ([`circuit`]) with
//! exact or shot-sampled expectation values ([`estimator`], [`readout`]), and
//! minimized by a classical optimizer ([`vqe`]). [`observables`] evaluates
//! ground-state observables and form-factor scans.

pub mod circuit;
pub mod encoding;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod observables;
pub mod optim;
pub mod pauli;
pub mod readout;
pub mod sampling;
pub mod units;
pub mod vqe;

pub use circuit::{AnsatzParams, Circuit, Gate, StateVector};
pub use encoding::{encode, encode_compact, encode_direct, try_encode, EncodingKind, ModeOperator};
pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorConfig, EstimatorMode, ShotEstimate};
pub use exec::Parallelism;
pub use observables::{charge_radius, evaluate_observable, form_factor_scan, pion_hamiltonian, FormFactorScan, ObservableSpec};
pub use pauli::{decompose, reconstruct, HermitianMatrix, PauliSum, PauliTerm};
pub use readout::{CalibrationMatrix, ReadoutNoise};
pub use units::{convert_units, Unit};
pub use vqe::{vqe_minimize, OptimizerConfig, OptimizerMethod, VqeTrace};
