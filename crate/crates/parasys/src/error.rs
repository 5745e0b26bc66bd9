//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries must be finite (found NaN or infinity)")]
    NonFiniteEntry,

    #[error("{operation} is only defined for real-valued matrices")]
    ComplexNotSupported { operation: &'static str },

    #[error("invalid exponent p = {p}; expected p >= 1")]
    InvalidExponent { p: f64 },

    #[error("matrix exponential requires t >= 0 (got t = {t})")]
    NegativeTime { t: f64 },

    #[error("time grid must be nonempty, nonnegative and contain a point <= 1e-3")]
    InvalidTimeGrid,

    #[error("diffusion coefficient {value} at cell {cell} violates coercivity (must be > 0)")]
    CoercivityViolation { cell: usize, value: f64 },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("dense operator of size {size} exceeds the cap {cap}; coarsen the grid")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("no long-time limit: boundary spectrum contains i*beta with beta = {beta}")]
    NoLimit { beta: f64 },

    #[error("no long-time limit: eigenvalue 0 is not semisimple")]
    DefectiveZero,

    #[error("invalid grid: {context}")]
    InvalidGrid { context: String },

    #[error("invalid scenario: {context}")]
    InvalidScenario { context: String },

    #[error("config error: {context}")]
    Config { context: String },

    #[error("unknown built-in example `{name}`")]
    UnknownExample { name: String },

    #[error(transparent)]
    LinAlg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
