//! Parameter-dependent matrix families and the quantities attached to them.
//!
//! A Hermitian family is A(ω) = Σ_ℓ f_ℓ(ω) A_ℓ with real scalar fields f_ℓ and
//! fixed Hermitian coefficient matrices; the rectangular analogue B(ω) drives
//! the singular value problems. Families only ever expose matrix *actions*:
//! the solvers never require A(ω) to be formed unless the caller asks for a
//! dense assembly.

use std::sync::Arc;

use crate::dense::{C64, CMat};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Relative Hermitian deviation accepted silently at construction.
const HERM_STRICT: f64 = 1e-13;
/// Deviations between the strict bound and this are symmetrized; beyond it the
/// input is rejected as user error.
const HERM_REPAIR: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Scalar fields
// ---------------------------------------------------------------------------

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A real-analytic scalar coefficient f_ℓ with its gradient.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// f(ω) ≡ 1.
    pub fn constant() -> Self {
        ScalarField::new("const", |_| 1.0, |w| vec![0.0; w.len()])
    }

    /// f(ω) = ω_axis.
    pub fn affine(axis: usize) -> Self {
        ScalarField::new(
            format!("affine:{axis}"),
            move |w| w[axis],
            move |w| {
                let mut g = vec![0.0; w.len()];
                g[axis] = 1.0;
                g
            },
        )
    }

    /// f(ω) = cos(ω_axis).
    pub fn cosine(axis: usize) -> Self {
        ScalarField::new(
            format!("cos:{axis}"),
            move |w| w[axis].cos(),
            move |w| {
                let mut g = vec![0.0; w.len()];
                g[axis] = -w[axis].sin();
                g
            },
        )
    }

    /// f(ω) = sin(ω_axis).
    pub fn sine(axis: usize) -> Self {
        ScalarField::new(
            format!("sin:{axis}"),
            move |w| w[axis].sin(),
            move |w| {
                let mut g = vec![0.0; w.len()];
                g[axis] = w[axis].cos();
                g
            },
        )
    }

    /// Look a field up by its manifest name: `const`, `affine:<axis>`,
    /// `cos:<axis>`, `sin:<axis>`.
    pub fn from_name(name: &str) -> Result<Self> {
        if name == "const" {
            return Ok(ScalarField::constant());
        }
        let (kind, axis) = name
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("unknown field name `{name}`")))?;
        let axis: usize = axis
            .parse()
            .map_err(|_| Error::Invalid(format!("bad axis in field name `{name}`")))?;
        match kind {
            "affine" => Ok(ScalarField::affine(axis)),
            "cos" => Ok(ScalarField::cosine(axis)),
            "sin" => Ok(ScalarField::sine(axis)),
            _ => Err(Error::Invalid(format!("unknown field name `{name}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, omega: &[f64]) -> f64 {
        (self.value)(omega)
    }

    #[inline]
    pub fn gradient(&self, omega: &[f64]) -> Vec<f64> {
        (self.gradient)(omega)
    }

    #[inline]
    pub fn partial(&self, omega: &[f64], axis: usize) -> f64 {
        self.gradient(omega)[axis]
    }
}

// ---------------------------------------------------------------------------
// Box domain
// ---------------------------------------------------------------------------

/// An axis-aligned box in R^d; the feasible region of every optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Invalid(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        for (lo, hi) in lower.iter().zip(upper.iter()) {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::Invalid(format!(
                    "box bounds must be finite with lower <= upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        BoxDomain::new(vec![lo], vec![hi]).expect("interval bounds")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn contains(&self, omega: &[f64]) -> bool {
        omega.len() == self.dim()
            && omega
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// Componentwise clip onto the box.
    pub fn clip(&self, omega: &[f64]) -> Vec<f64> {
        omega
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| x.max(*lo).min(*hi))
            .collect()
    }

    /// All 2^d corners, lexicographic order. Only sensible for small d.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0..(1usize << d) {
            let p: Vec<f64> = (0..d)
                .map(|q| {
                    if mask & (1 << q) != 0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    }
                })
                .collect();
            out.push(p);
        }
        out
    }

    /// Uniform grid with `per_axis` points per axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        assert!(per_axis >= 1);
        let d = self.dim();
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = (0..d)
                .map(|q| {
                    if per_axis == 1 {
                        0.5 * (self.lower[q] + self.upper[q])
                    } else {
                        self.lower[q]
                            + (self.upper[q] - self.lower[q]) * idx[q] as f64
                                / (per_axis - 1) as f64
                    }
                })
                .collect();
            out.push(p);
            let mut q = 0;
            loop {
                if q == d {
                    return out;
                }
                idx[q] += 1;
                if idx[q] < per_axis {
                    break;
                }
                idx[q] = 0;
                q += 1;
            }
        }
    }

    pub fn sample_uniform(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                if lo == hi {
                    *lo
                } else {
                    rng.gen_range(*lo..=*hi)
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Matrix storage
// ---------------------------------------------------------------------------

/// Coefficient matrices are kept dense or compressed-sparse-row.
#[derive(Clone, Debug)]
pub enum MatrixStore {
    Dense(CMat),
    Sparse(CsrMatrix),
}

impl MatrixStore {
    pub fn nrows(&self) -> usize {
        match self {
            MatrixStore::Dense(m) => m.nrows(),
            MatrixStore::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixStore::Dense(m) => m.ncols(),
            MatrixStore::Sparse(m) => m.ncols(),
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        match self {
            MatrixStore::Dense(m) => m.matvec(x, y),
            MatrixStore::Sparse(m) => m.matvec(x, y),
        }
    }

    pub fn matvec_adj(&self, x: &[C64], y: &mut [C64]) {
        match self {
            MatrixStore::Dense(m) => m.matvec_adj(x, y),
            MatrixStore::Sparse(m) => m.matvec_adj(x, y),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            MatrixStore::Dense(m) => m.clone(),
            MatrixStore::Sparse(m) => m.to_dense(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            MatrixStore::Dense(m) => m.max_abs(),
            MatrixStore::Sparse(m) => m.max_abs(),
        }
    }

    fn hermitian_deviation(&self) -> f64 {
        match self {
            MatrixStore::Dense(m) => m.hermitian_deviation(),
            MatrixStore::Sparse(m) => m.hermitian_deviation(),
        }
    }

    fn hermitized(&self) -> MatrixStore {
        match self {
            MatrixStore::Dense(m) => {
                let mut h = m.clone();
                h.hermitize();
                MatrixStore::Dense(h)
            }
            MatrixStore::Sparse(m) => MatrixStore::Sparse(m.hermitized()),
        }
    }
}

impl From<CMat> for MatrixStore {
    fn from(m: CMat) -> Self {
        MatrixStore::Dense(m)
    }
}

impl From<CsrMatrix> for MatrixStore {
    fn from(m: CsrMatrix) -> Self {
        MatrixStore::Sparse(m)
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// A(ω) = Σ_ℓ f_ℓ(ω) A_ℓ with Hermitian square coefficients.
#[derive(Clone, Debug)]
pub struct HermitianFamily {
    terms: Vec<(ScalarField, MatrixStore)>,
    n: usize,
    d: usize,
}

impl HermitianFamily {
    /// Validates Hermiticity of every coefficient. Deviations up to
    /// 1e-8 relative are repaired by symmetrization; larger ones are
    /// rejected.
    pub fn new(terms: Vec<(ScalarField, MatrixStore)>, d: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("family must have at least one term".into()));
        }
        let n = terms[0].1.nrows();
        let mut checked = Vec::with_capacity(terms.len());
        for (field, mat) in terms {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient matrices must all be {n}x{n}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            let scale = mat.max_abs().max(f64::MIN_POSITIVE);
            let dev = mat.hermitian_deviation();
            let mat = if dev <= HERM_STRICT * scale {
                mat
            } else if dev <= HERM_REPAIR * scale {
                mat.hermitized()
            } else {
                return Err(Error::NotHermitian {
                    deviation: dev / scale,
                    limit: HERM_REPAIR,
                });
            };
            checked.push((field, mat));
        }
        Ok(HermitianFamily {
            terms: checked,
            n,
            d,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(ScalarField, MatrixStore)] {
        &self.terms
    }

    pub fn coefficients(&self, omega: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|(f, _)| f.value(omega)).collect()
    }

    pub fn derivative_coefficients(&self, omega: &[f64], axis: usize) -> Vec<f64> {
        self.terms
            .iter()
            .map(|(f, _)| f.partial(omega, axis))
            .collect()
    }

    /// The action x ↦ A(ω)x. For Hermitian families it equals its adjoint.
    pub fn action(&self, omega: &[f64]) -> FamilyAction<'_> {
        assert_eq!(omega.len(), self.d, "parameter point has wrong dimension");
        FamilyAction {
            terms: &self.terms,
            coeffs: self.coefficients(omega).iter().map(|&c| C64::new(c, 0.0)).collect(),
            nrows: self.n,
            ncols: self.n,
        }
    }

    /// The action of ∂A/∂ω_axis = Σ_ℓ (∂f_ℓ/∂ω_axis) A_ℓ.
    pub fn derivative_action(&self, omega: &[f64], axis: usize) -> Result<FamilyAction<'_>> {
        if axis >= self.d {
            return Err(Error::Invalid(format!(
                "derivative axis {axis} out of range for d={}",
                self.d
            )));
        }
        Ok(FamilyAction {
            terms: &self.terms,
            coeffs: self
                .derivative_coefficients(omega, axis)
                .iter()
                .map(|&c| C64::new(c, 0.0))
                .collect(),
            nrows: self.n,
            ncols: self.n,
        })
    }

    /// Dense assembly of A(ω); intended for small n and for tests.
    pub fn assemble_dense(&self, omega: &[f64]) -> CMat {
        let coeffs = self.coefficients(omega);
        let mut m = CMat::zeros(self.n, self.n);
        for ((_, mat), &c) in self.terms.iter().zip(&coeffs) {
            if c != 0.0 {
                m.add_scaled(C64::new(c, 0.0), &mat.to_dense());
            }
        }
        m.hermitize();
        m
    }

    /// Dense assembly of ∂A/∂ω_axis.
    pub fn assemble_derivative_dense(&self, omega: &[f64], axis: usize) -> CMat {
        let coeffs = self.derivative_coefficients(omega, axis);
        let mut m = CMat::zeros(self.n, self.n);
        for ((_, mat), &c) in self.terms.iter().zip(&coeffs) {
            if c != 0.0 {
                m.add_scaled(C64::new(c, 0.0), &mat.to_dense());
            }
        }
        m.hermitize();
        m
    }

    /// A(ω) as a sparse matrix (used by the shifted solve providers).
    pub fn assemble_sparse(&self, omega: &[f64]) -> CsrMatrix {
        let coeffs = self.coefficients(omega);
        let mut trip: Vec<(usize, usize, C64)> = Vec::new();
        for ((_, mat), &c) in self.terms.iter().zip(&coeffs) {
            if c == 0.0 {
                continue;
            }
            let cc = C64::new(c, 0.0);
            match mat {
                MatrixStore::Sparse(s) => {
                    trip.extend(s.iter_entries().map(|(i, j, v)| (i, j, cc * v)))
                }
                MatrixStore::Dense(d) => {
                    for i in 0..d.nrows() {
                        for j in 0..d.ncols() {
                            let v = d[(i, j)];
                            if v != C64::new(0.0, 0.0) {
                                trip.push((i, j, cc * v));
                            }
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, &trip)
    }

    /// True when every field is `const` or `affine:<axis>`.
    pub fn is_affine(&self) -> bool {
        self.terms.iter().all(|(f, _)| {
            f.label() == "const" || f.label().starts_with("affine:")
        })
    }
}

/// B(ω) = Σ_ℓ f_ℓ(ω) B_ℓ with rectangular coefficients.
#[derive(Clone, Debug)]
pub struct GeneralFamily {
    terms: Vec<(ScalarField, MatrixStore)>,
    p: usize,
    q: usize,
    d: usize,
}

impl GeneralFamily {
    pub fn new(terms: Vec<(ScalarField, MatrixStore)>, d: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("family must have at least one term".into()));
        }
        let p = terms[0].1.nrows();
        let q = terms[0].1.ncols();
        for (_, mat) in &terms {
            if mat.nrows() != p || mat.ncols() != q {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient matrices must all be {p}x{q}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        Ok(GeneralFamily { terms, p, q, d })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(ScalarField, MatrixStore)] {
        &self.terms
    }

    pub fn coefficients(&self, omega: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|(f, _)| f.value(omega)).collect()
    }

    pub fn action(&self, omega: &[f64]) -> FamilyAction<'_> {
        assert_eq!(omega.len(), self.d);
        FamilyAction {
            terms: &self.terms,
            coeffs: self.coefficients(omega).iter().map(|&c| C64::new(c, 0.0)).collect(),
            nrows: self.p,
            ncols: self.q,
        }
    }

    pub fn assemble_dense(&self, omega: &[f64]) -> CMat {
        let coeffs = self.coefficients(omega);
        let mut m = CMat::zeros(self.p, self.q);
        for ((_, mat), &c) in self.terms.iter().zip(&coeffs) {
            if c != 0.0 {
                m.add_scaled(C64::new(c, 0.0), &mat.to_dense());
            }
        }
        m
    }
}

/// A materialized Σ c_ℓ A_ℓ action with its adjoint.
pub struct FamilyAction<'a> {
    terms: &'a [(ScalarField, MatrixStore)],
    coeffs: Vec<C64>,
    nrows: usize,
    ncols: usize,
}

impl FamilyAction<'_> {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// y = (Σ c_ℓ A_ℓ) x
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        if x.len() != self.ncols || y.len() != self.nrows {
            panic!(
                "action dimension mismatch: matrix {}x{}, x {}, y {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            );
        }
        y.fill(C64::new(0.0, 0.0));
        let mut tmp = vec![C64::new(0.0, 0.0); self.nrows];
        for ((_, mat), &c) in self.terms.iter().zip(&self.coeffs) {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            mat.matvec(x, &mut tmp);
            for i in 0..self.nrows {
                y[i] += c * tmp[i];
            }
        }
    }

    /// y = (Σ c_ℓ A_ℓ)* x. Coincides with `apply` for Hermitian families.
    pub fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        if x.len() != self.nrows || y.len() != self.ncols {
            panic!(
                "adjoint action dimension mismatch: matrix {}x{}, x {}, y {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            );
        }
        y.fill(C64::new(0.0, 0.0));
        let mut tmp = vec![C64::new(0.0, 0.0); self.ncols];
        for ((_, mat), &c) in self.terms.iter().zip(&self.coeffs) {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            mat.matvec_adj(x, &mut tmp);
            let cc = c.conj();
            for i in 0..self.ncols {
                y[i] += cc * tmp[i];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Spectral result containers
// ---------------------------------------------------------------------------

/// Eigenvalues in descending order with orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// n×J, column j pairs with values[j].
    pub vectors: CMat,
    pub residuals: Vec<f64>,
}

/// Singular triplets in descending order of σ.
#[derive(Clone, Debug)]
pub struct SingularTriplets {
    pub values: Vec<f64>,
    pub left: CMat,
    pub right: CMat,
    pub residuals: Vec<f64>,
    /// Set when a left vector had to be filled in for a (numerically) zero σ
    /// and the pair does not satisfy the two-sided consistency condition.
    pub inconsistent: Vec<bool>,
}

// ---------------------------------------------------------------------------
// Cheap global quantities
// ---------------------------------------------------------------------------

/// Largest singular value estimate by power iteration on the Gram operator.
///
/// Deterministic: starts from the normalized all-ones vector, stops when the
/// Rayleigh quotient changes by less than 1e-4 relative or after 500 steps.
pub fn estimate_norm(mat: &MatrixStore) -> f64 {
    estimate_norm_op(
        mat.nrows(),
        mat.ncols(),
        |x, y| mat.matvec(x, y),
        |x, y| mat.matvec_adj(x, y),
    )
}

/// Operator form of [`estimate_norm`] for implicitly represented matrices.
pub fn estimate_norm_op(
    nrows: usize,
    ncols: usize,
    apply: impl Fn(&[C64], &mut [C64]),
    apply_adjoint: impl Fn(&[C64], &mut [C64]),
) -> f64 {
    if nrows == 0 || ncols == 0 {
        return 0.0;
    }
    let mut x = vec![C64::new(1.0 / (ncols as f64).sqrt(), 0.0); ncols];
    let mut ax = vec![C64::new(0.0, 0.0); nrows];
    let mut g = vec![C64::new(0.0, 0.0); ncols];
    let mut rho_prev = -1.0f64;
    for _ in 0..500 {
        apply(&x, &mut ax);
        let rho = ax.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if rho == 0.0 {
            return 0.0;
        }
        if rho_prev >= 0.0 && (rho - rho_prev).abs() <= 1e-4 * rho {
            return rho.sqrt();
        }
        rho_prev = rho;
        apply_adjoint(&ax, &mut g);
        let gn = crate::dense::vec_norm(&g);
        if gn == 0.0 {
            return rho.sqrt();
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = gi / gn;
        }
    }
    rho_prev.max(0.0).sqrt()
}

/// Grid-sampled estimate of the Lipschitz constant Σ_ℓ max‖∇f_ℓ‖ ⋅ ‖A_ℓ‖.
///
/// The per-field gradient maximum is taken over a 5-points-per-axis grid, so
/// this is a practical estimate, not a certified bound.
pub fn lipschitz_constant(family: &HermitianFamily, box_domain: &BoxDomain) -> f64 {
    let grid = box_domain.grid(5);
    let mut total = 0.0;
    for (field, mat) in family.terms() {
        let gmax = grid
            .iter()
            .map(|p| {
                field
                    .gradient(p)
                    .iter()
                    .map(|g| g * g)
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if gmax > 0.0 {
            total += gmax * estimate_norm(mat);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident_store(n: usize) -> MatrixStore {
        MatrixStore::Dense(CMat::eye(n))
    }

    #[test]
    fn identity_family_action() {
        // family {(f=1, I_3)}: action is the identity for any ω.
        let fam =
            HermitianFamily::new(vec![(ScalarField::constant(), ident_store(3))], 1).unwrap();
        let act = fam.action(&[0.37]);
        let x = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)];
        let mut y = vec![C64::new(0.0, 0.0); 3];
        act.apply(&x, &mut y);
        for (u, v) in y.iter().zip(&x) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn sine_term_vanishes_at_zero() {
        // {(cos ω, M), (sin ω, N)} at ω = 0 acts as M alone.
        let m = CMat::from_real_rows(&[vec![2.0, 1.0], vec![1.0, -1.0]]);
        let n = CMat::from_real_rows(&[vec![0.0, 5.0], vec![5.0, 3.0]]);
        let fam = HermitianFamily::new(
            vec![
                (ScalarField::cosine(0), m.clone().into()),
                (ScalarField::sine(0), n.into()),
            ],
            1,
        )
        .unwrap();
        let act = fam.action(&[0.0]);
        let x = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        let mut y = vec![C64::new(0.0, 0.0); 2];
        act.apply(&x, &mut y);
        let mut expect = vec![C64::new(0.0, 0.0); 2];
        m.matvec(&x, &mut expect);
        for (u, v) in y.iter().zip(&expect) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn affine_derivative_is_coefficient() {
        // A_0 + ω_1 A_1 differentiated along axis 0 acts as A_1.
        let a0 = CMat::real_diag(&[1.0, 2.0]);
        let a1 = CMat::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let fam = HermitianFamily::new(
            vec![
                (ScalarField::constant(), a0.into()),
                (ScalarField::affine(0), a1.clone().into()),
            ],
            1,
        )
        .unwrap();
        let act = fam.derivative_action(&[0.8], 0).unwrap();
        let x = vec![C64::new(3.0, 0.0), C64::new(-2.0, 0.0)];
        let mut y = vec![C64::new(0.0, 0.0); 2];
        act.apply(&x, &mut y);
        let mut expect = vec![C64::new(0.0, 0.0); 2];
        a1.matvec(&x, &mut expect);
        for (u, v) in y.iter().zip(&expect) {
            assert!((u - v).norm() < 1e-15);
        }
        assert!(fam.derivative_action(&[0.8], 1).is_err());
    }

    #[test]
    fn estimate_norm_diagonal() {
        let m = MatrixStore::Dense(CMat::real_diag(&[3.0, -7.0, 2.0]));
        let est = estimate_norm(&m);
        assert!((est - 7.0).abs() < 0.07, "estimate {est}");
        assert!((estimate_norm(&ident_store(5)) - 1.0).abs() < 1e-10);
        let z = MatrixStore::Dense(CMat::zeros(4, 4));
        assert_eq!(estimate_norm(&z), 0.0);
    }

    #[test]
    fn lipschitz_constant_cases() {
        let fam =
            HermitianFamily::new(vec![(ScalarField::constant(), ident_store(4))], 1).unwrap();
        let b = BoxDomain::interval(-1.0, 1.0);
        assert_eq!(lipschitz_constant(&fam, &b), 0.0);

        let fam = HermitianFamily::new(
            vec![
                (ScalarField::constant(), ident_store(4)),
                (ScalarField::affine(0), ident_store(4)),
            ],
            1,
        )
        .unwrap();
        let c = lipschitz_constant(&fam, &b);
        assert!((c - 1.0).abs() < 0.01, "constant {c}");
    }

    #[test]
    fn hermitian_repair_and_reject() {
        // Deviation around 1e-10 relative: accepted and symmetrized.
        let mut almost = CMat::from_real_rows(&[vec![1.0, 0.5], vec![0.5 + 1e-10, 2.0]]);
        almost[(0, 1)] = C64::new(0.5, 0.0);
        let fam = HermitianFamily::new(vec![(ScalarField::constant(), almost.into())], 1);
        let fam = fam.unwrap();
        let a = fam.assemble_dense(&[0.0]);
        assert!(a.hermitian_deviation() < 1e-15);

        // Gross asymmetry: rejected.
        let bad = CMat::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(
            HermitianFamily::new(vec![(ScalarField::constant(), bad.into())], 1),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn box_clip_and_grid() {
        let b = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.clip(&[2.0, -3.0]), vec![1.0, -1.0]);
        assert_eq!(b.grid(3).len(), 9);
        assert_eq!(b.corners().len(), 4);
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn field_catalog_roundtrip() {
        for name in ["const", "affine:0", "cos:1", "sin:2"] {
            let f = ScalarField::from_name(name).unwrap();
            assert_eq!(f.label(), name);
        }
        assert!(ScalarField::from_name("tan:0").is_err());
    }
}
