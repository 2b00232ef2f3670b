use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty distribution")]
    EmptyDistribution,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("probability {0} outside the admissible range")]
    ProbabilityOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate sample")]
    DegenerateSample,

    #[error("oracle size limit: n = {0} exceeds 7")]
    OracleSizeLimit(usize),

    #[error("non-finite gradient")]
    NonFiniteGradient,

    #[error("training diverged at step {step}")]
    TrainingDiverged { step: usize },

    #[error("GEVD fit failed: {0}")]
    FitFailed(String),

    #[error("exclusion region too large: acceptance rate {rate:.2e}")]
    ExclusionTooLarge { rate: f64 },

    #[error("empty conditional set")]
    EmptyConditionalSet,

    #[error("zero total mass")]
    ZeroTotalMass,

    #[error("extreme set empty at this threshold")]
    EmptyExtremeSet,

    #[error("index {index} out of range for pool of size {len}")]
    InvalidIndex { index: usize, len: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient
                | Error::TrainingDiverged { .. }
                | Error::FitFailed(_)
                | Error::DegenerateSample
        )
    }
}
