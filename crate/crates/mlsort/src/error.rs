use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A key that must be finite is NaN or infinite. `index` is the position
    /// of the offending key in the operation's input.
    #[error("key at index {index} is not finite")]
    NonFiniteKey { index: usize },

    #[error("training sample size {n0} exceeds data size {n}")]
    SampleTooLarge { n0: usize, n: usize },

    #[error("cannot fit a model to a degenerate key range (all sampled keys equal)")]
    DegenerateKeyRange,

    #[error("training target at index {index} must be finite and in [0, 1]")]
    InvalidTarget { index: usize },

    #[error("sequence is not sorted ascending at index {index}")]
    NotSorted { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("estimate key at index {index} is not present in the truth sequence")]
    TruthMismatch { index: usize },

    #[error("occupancy count {q} exceeds bucket count {n}")]
    OccupancyOutOfRange { q: usize, n: usize },

    /// The final sortedness check failed. Reaching this is a bug in the
    /// pipeline, not a property of the input.
    #[error("sorted-output verification failed")]
    VerificationFailed,

    #[error("unsupported artifact version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("malformed artifact: {0}")]
    MalformedArtifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
