//! Dense complex linear algebra for small matrices (dimension up to a few
//! dozen): LU, Householder QR, one-sided Jacobi SVD and a complex Schur
//! eigensolver with dual (left) eigenvectors.

mod eigen;
mod factor;
mod matrix;
mod svd;

pub use eigen::{
    eigengap, eigenvalues, match_nearest, schur, spectral_abscissa_min, spectral_radius,
    sort_spectrum, EigenSystem, Schur, DEFECTIVE_CONDITION,
};
pub use factor::{householder_qr, inverse, solve, Lu};
pub use matrix::{dot, real_norm, to_complex, vec_norm, DenseMatrix, C64, ONE, ZERO};
pub use svd::{op_norm, orthonormal_completion, svd, Svd};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix rows have unequal lengths")]
    Ragged,
    #[error("matrix is {rows}x{cols}, square required")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (pivot {pivot} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("eigenvector matrix condition {condition:.3e} exceeds {limit:.0e}")]
    DefectiveMatrix { condition: f64, limit: f64 },
    #[error("{routine} did not converge in {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },
    #[error("non-finite entries")]
    NonFinite,
}
