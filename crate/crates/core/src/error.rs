use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("empty input")]
    Empty,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not a correlation matrix: {0}")]
    NotCorrelation(String),

    #[error("positive-definite repair failed: {0}")]
    RepairFailed(String),

    #[error("pseudo-observation {value} at row {row}, column {col} is not strictly inside (0, 1)")]
    Boundary { row: usize, col: usize, value: f64 },

    #[error("column {0} is degenerate (zero variance)")]
    DegenerateColumn(usize),

    #[error("{method} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown class label {0}")]
    UnknownLabel(usize),
}

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
