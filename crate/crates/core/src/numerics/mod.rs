//! Dense complex linear algebra and a small LP solver.
//!
//! Everything here is a pure function of its inputs. Tolerances:
//! Hermiticity 1e-10 (relative to the largest entry), PSD 1e-9, LP
//! feasibility 1e-9.

mod decomp;
mod lp;
mod matrix;

pub use decomp::{cholesky, forward_solve, hermitian_eigenvalues, hermitian_logdet, is_psd, null_space_basis};
pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Sense};
pub use matrix::ComplexMatrix;
pub use num_complex::Complex64;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const LP_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("matrix must have no more rows than columns: {0:?}")]
    NotWide((usize, usize)),
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("null space is empty")]
    EmptyNullSpace,
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}
