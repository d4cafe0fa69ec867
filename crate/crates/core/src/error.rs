use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {op} got {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix of order {0} is not of even order")]
    OddDimension(usize),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e}, allowed {allowed:e})")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("Jacobi iteration did not converge within {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("transformation is not symplectic (defect {defect:e})")]
    NotSymplectic { defect: f64 },

    #[error("symplectic pairing failed: {0}")]
    Pairing(String),

    #[error("degenerate eigenspace could not be resolved: {0}")]
    Degeneracy(String),

    #[error("operators do not commute (relative commutator {defect:e})")]
    NotCommuting { defect: f64 },

    #[error("invalid operator spec: {0}")]
    Spec(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("CSV error: {0}")]
    Csv(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: files, formulas, schemas, shapes.
    Input,
    /// Well-formed input violating a mathematical precondition.
    Precondition,
    /// The computation itself broke down.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidMatrix(_)
            | Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::OddDimension(_)
            | Error::Spec(_)
            | Error::Schedule(_)
            | Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Io(_) => ErrorClass::Input,
            Error::NotSymmetric { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::Singular
            | Error::NotSymplectic { .. }
            | Error::NotCommuting { .. } => ErrorClass::Precondition,
            Error::NoConvergence { .. }
            | Error::Pairing(_)
            | Error::Degeneracy(_)
            | Error::Eval(_) => ErrorClass::Numerical,
        }
    }

    /// Short stable identifier for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSquare { .. } => "not_square",
            Error::OddDimension(_) => "odd_dimension",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NotPositiveSemidefinite { .. } => "not_positive_semidefinite",
            Error::Singular => "singular",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NotSymplectic { .. } => "not_symplectic",
            Error::Pairing(_) => "pairing_failure",
            Error::Degeneracy(_) => "degeneracy",
            Error::NotCommuting { .. } => "not_commuting",
            Error::Spec(_) => "invalid_spec",
            Error::Schedule(_) => "invalid_schedule",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse_error",
            Error::Eval(_) => "eval_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
            Error::Io(_) => "io_error",
        }
    }
}
