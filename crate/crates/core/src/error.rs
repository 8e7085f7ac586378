use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 1 or 2)")]
    Dimension(usize),

    #[error("grid needs at least {min} nodes per axis, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("collar too thin: {0}")]
    CollarTooThin(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid cut-off nesting: {0}")]
    InvalidNesting(String),

    #[error("fractional exponent s = {0} lies outside (0, 1)")]
    ExponentOutOfRange(f64),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dense operator on {nodes} nodes exceeds the configured cap of {cap}")]
    MemoryBudget { nodes: usize, cap: usize },

    #[error("system matrix is not positive definite")]
    SingularMatrix,

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("inconclusive regularity verdicts: {0}")]
    Inconclusive(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
