//! Symplectic spectral analysis of positive definite operators on `H ⊕ H`.

pub mod analysis;
pub mod error;
pub mod expr;
pub mod matrix;
pub mod operator;
pub mod sample;
pub mod symplectic;

pub use error::{Error, ErrorClass, Result};
pub use matrix::DenseMatrix;
pub use operator::{HHOperatorSpec, HOperatorSpec, OperatorSpec, SpecFile, TruncationSchedule};
pub use symplectic::{
    is_symplectic, random_symplectic, symplectic_conjugate, symplectic_eigenvalues, williamson,
    WilliamsonResult,
};
