use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("length {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(
        "alphabet mismatch: degrader expects {expected} input symbols, channel emits {actual}"
    )]
    AlphabetMismatch { expected: usize, actual: usize },

    #[error("operation requires an erasure channel")]
    NotErasure,

    #[error("eavesdropper channel is not degraded w.r.t. the main channel: {0}")]
    DegradationViolated(String),

    #[error(
        "eavesdropper information set is not contained in the main information set \
         ({violations} positions); raise Monte Carlo trials or use exact tables"
    )]
    InclusionViolated { violations: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("key length r={r} exceeds accumulated information length {available}")]
    KeyTooLong { r: usize, available: usize },
}
