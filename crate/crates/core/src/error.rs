use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("sobol sequence exhausted at index {0}")]
    SequenceExhausted(u64),
    #[error("sobol dimension {0} unsupported (1..={max})", max = crate::qmc::MAX_DIMENSION)]
    UnsupportedDimension(usize),
    #[error("direction-number table, line {line}: {reason}")]
    DirectionNumbers { line: usize, reason: String },
    #[error("invalid bounds on dimension {dim}: min {min} must be below max {max}")]
    InvalidBounds { dim: usize, min: f64, max: f64 },
    #[error("input {dim} out of bounds: {value} not in [{min}, {max}]")]
    OutOfBounds { dim: usize, value: f64, min: f64, max: f64 },
    #[error("non-finite value in record {record}")]
    NonFiniteRecord { record: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("non-finite activation in layer {layer}")]
    NonFiniteLayer { layer: usize },
    #[error("dataset has {len} records, need at least {min}")]
    DatasetTooSmall { len: usize, min: usize },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("simulator query failed: {0}")]
    Simulator(String),
    #[error("unknown benchmark simulator {0:?}")]
    UnknownBenchmark(String),
    #[error("all {0} sampled configurations failed to train")]
    TuningFailed(usize),
    #[error("{failed} of {attempted} initial queries failed")]
    TooManyFailures { failed: usize, attempted: usize },
    #[error("aborted after {0} consecutive failed intelligent queries")]
    ConsecutiveFailures(usize),
}
