use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors returned by the simulation routines.
///
/// Variants split into two families: input validation (bad parameters,
/// violated preconditions) and numerical failure (the computation ran but
/// produced something that breaks an invariant). [`Error::is_validation`]
/// tells them apart for callers that map errors onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver failed for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("state has mixed parity: <P> = {expectation:.6} (|<P>| <= 0.9)")]
    MixedParity { expectation: f64 },

    #[error("Hamiltonian does not commute with parity (||[P,H]|| = {norm:.3e})")]
    ParityBroken { norm: f64 },

    #[error("norm drift {drift:.3e} persists after {halvings} step halvings (last step {step:.3e})")]
    NormDrift { drift: f64, halvings: u32, step: f64 },

    #[error("trace drift {drift:.3e} at t = {time:.6} with step {step:.3e}")]
    TraceDrift { drift: f64, time: f64, step: f64 },

    #[error("rotating-wave precondition violated: {detail}")]
    RwaPrecondition { detail: String },

    #[error("carrier off resonance: {detail}")]
    OffResonant { detail: String },

    #[error("vanishing transition element {name} = {value:.3e}")]
    VanishingElement { name: String, value: f64 },

    #[error("gate leakage {leakage:.3e} exceeds {limit:.1e}")]
    Leakage { leakage: f64, limit: f64 },

    #[error("composed map deviates from unitarity by {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error("dimension {dim} exceeds ceiling {ceiling}")]
    DimensionOverflow { dim: usize, ceiling: usize },

    #[error("{failed} of {total} benchmark runs failed: {first}")]
    BenchmarkFailures { failed: usize, total: usize, first: String },

    #[error("at g = {g}: {source}")]
    AtCoupling {
        g: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for input/precondition errors, false for numerical failures
    /// and I/O.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::NotHermitian { .. }
            | Error::RwaPrecondition { .. }
            | Error::OffResonant { .. }
            | Error::VanishingElement { .. }
            | Error::DimensionOverflow { .. } => true,
            Error::AtCoupling { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
