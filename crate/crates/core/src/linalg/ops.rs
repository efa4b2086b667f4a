//! Operator abstractions consumed by the iterative eigensolvers.

use crate::dense::{C64, CMat};
use crate::linalg::solve::{LuFactor, ShiftedSolveProvider};
use crate::model::FamilyAction;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Hermitian matrix action.
pub trait HermOp {
    fn dim(&self) -> usize;
    fn apply(&mut self, x: &[C64], y: &mut [C64]);
}

/// Rectangular matrix action with its adjoint.
pub trait RectOp {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&mut self, x: &[C64], y: &mut [C64]);
    fn apply_adjoint(&mut self, x: &[C64], y: &mut [C64]);
}

/// Hermitian view of an assembled family action.
pub struct HermFamilyOp<'a>(pub FamilyAction<'a>);

impl HermOp for HermFamilyOp<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
    }
}

impl RectOp for HermFamilyOp<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
    }

    fn apply_adjoint(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.apply_adjoint(x, y);
    }
}

/// Rectangular view of an assembled family action.
pub struct RectFamilyOp<'a>(pub FamilyAction<'a>);

impl RectOp for RectFamilyOp<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
    }

    fn apply_adjoint(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.apply_adjoint(x, y);
    }
}

/// Dense Hermitian matrix as an operator.
pub struct DenseHermOp<'a>(pub &'a CMat);

impl HermOp for DenseHermOp<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.matvec(x, y);
    }
}

/// Sparse Hermitian matrix as an operator.
pub struct CsrHermOp<'a>(pub &'a CsrMatrix);

impl HermOp for CsrHermOp<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.0.matvec(x, y);
    }
}

/// Gram operator B*B of a rectangular action.
pub struct GramOp<'a> {
    inner: &'a mut dyn RectOp,
    tmp: Vec<C64>,
}

impl<'a> GramOp<'a> {
    pub fn new(inner: &'a mut dyn RectOp) -> Self {
        let p = inner.nrows();
        GramOp {
            inner,
            tmp: vec![C64::new(0.0, 0.0); p],
        }
    }
}

impl HermOp for GramOp<'_> {
    fn dim(&self) -> usize {
        self.inner.ncols()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.inner.apply(x, &mut self.tmp);
        self.inner.apply_adjoint(&self.tmp, y);
    }
}

/// Inverse Gram operator (M*M)⁻¹ = M⁻¹ M⁻*, realized through a shifted solve
/// provider for M = A − s·I. Hermitian positive definite; its largest
/// eigenvalues are 1/σ² for the smallest singular values of M.
pub struct InverseGramOp<'a> {
    provider: &'a mut dyn ShiftedSolveProvider,
    shift: C64,
    failure: Option<Error>,
}

impl<'a> InverseGramOp<'a> {
    pub fn new(provider: &'a mut dyn ShiftedSolveProvider, shift: C64) -> Self {
        InverseGramOp {
            provider,
            shift,
            failure: None,
        }
    }

    /// First solve error encountered, if any; the apply interface cannot
    /// report it in-band.
    pub fn take_failure(&mut self) -> Option<Error> {
        self.failure.take()
    }
}

impl HermOp for InverseGramOp<'_> {
    fn dim(&self) -> usize {
        self.provider.dim()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        if self.failure.is_some() {
            y.fill(C64::new(0.0, 0.0));
            return;
        }
        match self
            .provider
            .solve_adjoint(self.shift, x)
            .and_then(|t| self.provider.solve(self.shift, &t))
        {
            Ok(res) => y.copy_from_slice(&res),
            Err(e) => {
                self.failure = Some(e);
                y.fill(C64::new(0.0, 0.0));
            }
        }
    }
}

/// Shift-inverted operator (A − s·I)⁻¹ through a provider.
pub struct ShiftInvertOp<'a> {
    provider: &'a mut dyn ShiftedSolveProvider,
    shift: C64,
    failure: Option<Error>,
}

impl<'a> ShiftInvertOp<'a> {
    pub fn new(provider: &'a mut dyn ShiftedSolveProvider, shift: C64) -> Self {
        ShiftInvertOp {
            provider,
            shift,
            failure: None,
        }
    }

    pub fn take_failure(&mut self) -> Option<Error> {
        self.failure.take()
    }
}

impl HermOp for ShiftInvertOp<'_> {
    fn dim(&self) -> usize {
        self.provider.dim()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        if self.failure.is_some() {
            y.fill(C64::new(0.0, 0.0));
            return;
        }
        match self.provider.solve(self.shift, x) {
            Ok(res) => y.copy_from_slice(&res),
            Err(e) => {
                self.failure = Some(e);
                y.fill(C64::new(0.0, 0.0));
            }
        }
    }
}

/// Spectral fold (A − s·I)², the factorization-free near-shift fallback.
pub struct FoldOp<'a> {
    op: &'a mut dyn HermOp,
    shift: f64,
    tmp: Vec<C64>,
}

impl<'a> FoldOp<'a> {
    pub fn new(op: &'a mut dyn HermOp, shift: f64) -> Self {
        let n = op.dim();
        FoldOp {
            op,
            shift,
            tmp: vec![C64::new(0.0, 0.0); n],
        }
    }
}

impl HermOp for FoldOp<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.op.apply(x, &mut self.tmp);
        for i in 0..x.len() {
            self.tmp[i] -= self.shift * x[i];
        }
        self.op.apply(&self.tmp, y);
        for i in 0..x.len() {
            y[i] -= self.shift * self.tmp[i];
        }
    }
}

/// The pencil-backed matrix B(s) = L⁻¹B − s·I applied without ever forming
/// L⁻¹B. This is the matrix whose smallest singular value the
/// distance-to-instability driver minimizes, with s = iω.
pub struct ShiftedPencilOp<'a> {
    b: &'a CsrMatrix,
    l_factor: LuFactor,
    shift: C64,
    tmp: Vec<C64>,
}

impl<'a> ShiftedPencilOp<'a> {
    pub fn new(b: &'a CsrMatrix, l: &CsrMatrix, shift: C64) -> Result<Self> {
        let n = b.nrows();
        Ok(ShiftedPencilOp {
            b,
            l_factor: LuFactor::factor_csr(l)?,
            shift,
            tmp: vec![C64::new(0.0, 0.0); n],
        })
    }
}

impl RectOp for ShiftedPencilOp<'_> {
    fn nrows(&self) -> usize {
        self.b.nrows()
    }

    fn ncols(&self) -> usize {
        self.b.nrows()
    }

    /// y = L⁻¹(B x) − s x
    fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.b.matvec(x, &mut self.tmp);
        let sol = self.l_factor.solve(&self.tmp);
        for i in 0..y.len() {
            y[i] = sol[i] - self.shift * x[i];
        }
    }

    /// y = B*(L⁻* x) − conj(s) x
    fn apply_adjoint(&mut self, x: &[C64], y: &mut [C64]) {
        let sol = self.l_factor.solve_adjoint(x);
        self.b.matvec_adj(&sol, y);
        let sc = self.shift.conj();
        for i in 0..y.len() {
            y[i] -= sc * x[i];
        }
    }
}
