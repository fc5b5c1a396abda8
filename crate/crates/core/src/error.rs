use thiserror::Error;

/// Errors raised by grid, transform, problem, iteration and training routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("transform {kind} is incompatible with boundary condition {bc}")]
    IncompatibleTransform { kind: String, bc: String },

    #[error("near-singular symbol: min |λ| = {min:e} < {threshold:e} (max |λ| = {max:e})")]
    SingularSymbol { min: f64, max: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense assembly of {0} unknowns exceeds the cap of {cap}", cap = crate::problems::DENSE_CAP)]
    TooLarge(usize),

    #[error("right-hand side has zero norm")]
    ZeroSource,

    #[error("zero probe in batch (index {0})")]
    ZeroProbe(usize),

    #[error("empty probe batch")]
    EmptyBatch,

    #[error("operation requires a FourierDiag correction map")]
    NotFourierDiag,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
