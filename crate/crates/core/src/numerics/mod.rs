//! Self-contained numerical kernels shared by the rest of the crate.

mod linalg;
mod lp;
mod optimize;
mod projection;
mod random;
mod special;

pub use linalg::{
    check_dim, check_symmetric, cholesky, mat_vec, quad_form, spd_inverse, sym_sqrt, BoxBounds,
    HalfSpace, Matrix, Vector,
};
pub use lp::{lp_solve, LpSolution};
pub use optimize::{
    grid_then_golden, minimize_1d, minimize_smooth, Minimum1d, SmoothOptions, SmoothOutcome,
};
pub use projection::{dykstra_project, Projection, ProjectionOptions};
pub use random::{mix_seed, RandomSource, SEED_MIX_DESCRIPTION};
pub use special::{adaptive_simpson, erf, ln_gamma, sigmoid, softplus};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid box bounds: {0}")]
    InvalidBounds(String),
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("iteration limit reached after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        last: Vector,
        trace: Vec<f64>,
    },
    #[error("line search failed to make progress (gradient norm {residual:e})")]
    LineSearchFailed { residual: f64, last: Vector },
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
}
