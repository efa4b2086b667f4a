//! Subspace procedures for large-scale eigenvalue and singular value
//! optimization.
//!
//! The library optimizes a prescribed eigenvalue (or singular value) of a
//! parameter-dependent Hermitian matrix family A(ω) = Σ f_ℓ(ω) A_ℓ over a box,
//! by alternating between a globally solved small projected problem and
//! enlargement of the projection subspace with eigenvectors of the full
//! problem at the projected optimizer. Ready-made problem builders cover the
//! numerical radius, the distance to instability and largest-eigenvalue
//! minimization of affine families.

pub mod applications;
pub mod dense;
pub mod framework;
pub mod inner_opt;
pub mod linalg;
pub mod model;
pub mod reduced;
pub mod sparse;

pub use dense::{C64, CMat};
pub use sparse::CsrMatrix;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {limit:.3e}")]
    NotHermitian { deviation: f64, limit: f64 },

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("eigensolver did not converge: {context} (best residual {best_residual:.3e})")]
    NonConvergence { context: String, best_residual: f64 },

    #[error("singular factorization: {0}")]
    SingularFactor(String),

    #[error("objective evaluation failed after {evals} evaluations: {message}")]
    ObjectiveFailure { evals: usize, message: String },

    #[error("empty subspace: all candidate directions were dropped")]
    EmptySubspace,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
