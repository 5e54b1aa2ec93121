use thiserror::Error;

/// Errors raised by the matrix, base-solver, update and fixture layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmwError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    /// A matrix with zero rows or columns was requested.
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("base matrix is singular: pivot {pivot:e} at step {index} below threshold {threshold:e}")]
    SingularBase {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("capacitance matrix is singular: pivot {pivot:e} at step {index} below threshold {threshold:e}")]
    SingularCapacitance {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("assembled total matrix is singular: pivot {pivot:e} at step {index} below threshold {threshold:e}")]
    SingularTotal {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("operation requires at least one update pair")]
    EmptyUpdates,

    #[error("solve oracle failed: {0}")]
    OracleFailure(String),

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, SmwError>;
