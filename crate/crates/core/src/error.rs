use thiserror::Error;

pub type Result<T, E = KoopError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KoopError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient history: index {index} needs at least {needed} prior samples")]
    InsufficientHistory { index: usize, needed: usize },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("series too short: {len} samples, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("model is missing control inputs")]
    MissingInputs,

    #[error("operation not supported for {family} models: {reason}")]
    WrongFamily {
        family: &'static str,
        reason: String,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("stability bound violated: {0}")]
    Stability(String),

    #[error("state diverged at step {step}")]
    Diverged { step: usize },

    #[error("no convergence after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("no threshold crossings found")]
    NoCrossings,
}

impl KoopError {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        KoopError::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KoopError::InvalidArgument(msg.into())
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            KoopError::Factorization(_)
                | KoopError::Diverged { .. }
                | KoopError::NoConvergence { .. }
                | KoopError::NoCrossings
                | KoopError::NonFinite(_)
                | KoopError::Stability(_)
        )
    }
}
