//! Numerical kernels: dense Hermitian eigendecomposition, Lanczos solvers,
//! orthonormal basis maintenance, shifted linear solves and the subspace
//! distance diagnostic.

pub mod basis;
pub mod eig;
pub mod lanczos;
pub mod ops;
pub mod solve;

pub use basis::{Basis, DEFAULT_DROP_TOL, expand_basis, subspace_distance};
pub use eig::{dense_herm_eig, small_svd};
pub use lanczos::{LanczosOptions, Which, lanczos_extremal, lanczos_near_shift, singular_triplets};
pub use ops::{
    CsrHermOp, DenseHermOp, FoldOp, GramOp, HermFamilyOp, HermOp, InverseGramOp, RectFamilyOp,
    RectOp, ShiftInvertOp, ShiftedPencilOp,
};
pub use solve::{
    BandedLu, DenseLu, LuFactor, MatrixShiftProvider, PencilShiftProvider, ShiftedSolveProvider,
    SparseLu,
};
