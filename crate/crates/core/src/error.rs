use thiserror::Error;

/// Everything that can go wrong inside the analysis stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite state or velocity at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("adaptive step collapsed below {min_step:e} at t = {time}")]
    StepUnderflow { time: f64, min_step: f64 },

    #[error("validation failed: {0}")]
    ValidationFailed(String),

    #[error("cell sets live on different grids")]
    GridMismatch,

    #[error("invariant set is not isolated: {0}")]
    NotIsolated(String),

    #[error("operation requires a nonempty cell set")]
    EmptySet,

    #[error("invalid index pair: {0}")]
    InvalidPair(String),

    #[error("region is not trapping: {} offending cells", offending.len())]
    NotTrapping { offending: Vec<usize> },

    #[error("continuation broken at lambda = {lambda}")]
    ContinuationBroken { lambda: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
