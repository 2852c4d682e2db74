use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),

    #[error("Haar index 0 (the constant function) has no level/offset")]
    ConstantHasNoLevel,

    #[error("grid level {given} is too coarse, need at least {required}")]
    InsufficientLevel { given: u32, required: u32 },

    #[error("index set must be strictly increasing and nonempty")]
    InvalidIndexSet,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operation requires a nonzero vector")]
    ZeroVector,

    #[error("non-finite input")]
    NonFinite,

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bound exceeds 2^62")]
    Overflow,

    #[error("selected last nonzero position {position} but its coefficient is {value:e} after the step")]
    ZeroingMissed { position: usize, value: f64 },

    #[error("position {position} has zero tail but minimizer t0 = {t0:e}")]
    PropertyPAnomaly { position: usize, t0: f64 },

    #[error("index {index} is out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
}
