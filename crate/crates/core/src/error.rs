use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants are split into input validation problems and numerical failures so
/// that frontends can map them onto distinct exit statuses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("control and target coincide on qubit {0}")]
    ControlIsTarget(usize),
    #[error("expected {expected} ansatz parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("target state has complex amplitudes; the direct ansatz only prepares real states")]
    NotReal,
    #[error("target state leaves the single-occupancy subspace")]
    OutsideSubspace,
    #[error("identity term cannot be sampled; strip it first")]
    IdentityTerm,
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported unit conversion {from} -> {to}")]
    UnsupportedConversion { from: String, to: String },
    #[error("calibration matrix is singular")]
    SingularCalibration,
    #[error("least-squares fit is singular")]
    SingularFit,
    #[error("normalization is zero")]
    ZeroNormalization,
    #[error("non-finite energy at iteration {0}")]
    NonFinite(usize),
    #[error("Pauli coefficients overflow the f64 range")]
    Overflow,
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularCalibration
                | Error::SingularFit
                | Error::ZeroNormalization
                | Error::NonFinite(_)
                | Error::Overflow
        )
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
