use thiserror::Error;

/// Errors raised by constructors, assemblers and self-checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteFunction { eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("jump family is not closed under adjoints: operator {index} has no adjoint partner (best deviation {deviation:.3e})")]
    NotAdjointClosed { index: usize, deviation: f64 },

    #[error("weight is not balanced: {0}")]
    NotBalanced(String),

    #[error("sigma mismatch: weight built for sigma={weight}, filter uses sigma={filter}")]
    SigmaMismatch { weight: f64, filter: f64 },

    #[error("quadrature under-resolved for {what}: estimated relative error {estimate:.3e}")]
    Quadrature { what: String, estimate: f64 },

    #[error("{what}: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    CheckFailed {
        what: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("spectra of the two decompositions differ")]
    SpectrumMismatch,

    #[error("eigen-decomposition did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
