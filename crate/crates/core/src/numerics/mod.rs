//! Dense-matrix and scalar kernels: spectral bound, linear solve, bisection,
//! and explicit ODE integration. Everything here is a pure function of its
//! inputs; values are immutable after construction.

mod bisect;
mod linear;
mod matrix;
mod ode;
mod spectral;

pub use bisect::{bisect_monotone, Direction};
pub use linear::linear_solve;
pub use matrix::{max_norm, DenseMatrix};
pub use ode::{integrate_ode, integrate_ode_guarded, OdeControls, OdeOutcome};
pub use spectral::{spectral_bound, spectral_bound_with, SpectralOptions, SpectralResult};

#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix must have at least one row")]
    EmptyMatrix,
    #[error("matrix is not square: {rows} rows but a row of length {row_len}")]
    NotSquare { rows: usize, row_len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("off-diagonal entry ({row}, {col}) = {value} is negative; matrix is not quasi-positive")]
    NonQuasiPositive { row: usize, col: usize, value: f64 },
    #[error("matrix is reducible: no directed path from {from} to {to}")]
    Reducible { from: usize, to: usize },
    #[error("iteration cap reached after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("initial iterate must be strictly positive and of matching dimension")]
    BadInitialIterate,
    #[error("pivot {pivot:.3e} in column {column} below threshold {threshold:.3e}")]
    Singular {
        pivot: f64,
        column: usize,
        threshold: f64,
    },
    #[error("bracket endpoints f(lo) = {f_lo:.3e}, f(hi) = {f_hi:.3e} inconsistent with declared monotonicity")]
    BadBracket { f_lo: f64, f_hi: f64 },
    #[error("step size {step:.3e} underflowed at t = {t:.6}")]
    StepUnderflow { t: f64, step: f64 },
    #[error("state left the finite range at t = {t:.6}")]
    NonFiniteState { t: f64 },
}
