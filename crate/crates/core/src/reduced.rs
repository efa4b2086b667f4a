//! Projected families and reduced-problem evaluation.
//!
//! Projection turns A(ω) = Σ f_ℓ(ω) A_ℓ into the m×m family Σ f_ℓ(ω) V*A_ℓV
//! whose coefficient matrices are formed once; every subsequent ω-evaluation
//! is an O(κ m²) assembly plus a small dense eigendecomposition. Three
//! restrictions exist: one-sided Hermitian for eigenvalue problems, two-sided
//! (U, V) for largest singular values and right-sided for smallest singular
//! values.

use std::sync::Arc;

use crate::dense::{C64, CMat, thin_qr};
use crate::linalg::basis::Basis;
use crate::linalg::eig::{dense_herm_eig, small_svd};
use crate::model::{GeneralFamily, HermitianFamily, MatrixStore, ScalarField};
use crate::{Error, Result};

/// Reduced eigenvalue (or singular value) with its gradient and the local
/// spectral context.
#[derive(Clone, Debug)]
pub struct ValueGrad {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Distance to the nearest other eigenvalue (singular value).
    pub gap: f64,
    /// Set when the gap is within 1e-8·(1+|value|}; the gradient is then the
    /// analytic formula at the returned eigenvector, a valid subgradient
    /// choice for max-type eigenvalue objectives.
    pub multiplicity_flag: bool,
}

/// Multiplicity threshold relative to (1 + |value|).
const GAP_TOL: f64 = 1e-8;

fn near_multiple(gap: f64, value: f64) -> bool {
    gap <= GAP_TOL * (1.0 + value.abs())
}

/// V* M V for one stored coefficient term.
fn project_term(mat: &MatrixStore, basis: &CMat) -> CMat {
    let n = basis.nrows();
    let m = basis.ncols();
    let mut image = CMat::zeros(n, m);
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    for j in 0..m {
        mat.matvec(basis.col(j), &mut tmp);
        image.set_col(j, &tmp);
    }
    basis.adj_matmul(&image)
}

/// Columns of M·V for the new basis columns only.
fn term_image(mat: &MatrixStore, basis: &CMat, from_col: usize) -> CMat {
    let rows = mat.nrows();
    let m = basis.ncols();
    let mut image = CMat::zeros(rows, m - from_col);
    let mut tmp = vec![C64::new(0.0, 0.0); rows];
    for j in from_col..m {
        mat.matvec(basis.col(j), &mut tmp);
        image.set_col(j - from_col, &tmp);
    }
    image
}

// ---------------------------------------------------------------------------
// One-sided Hermitian projection
// ---------------------------------------------------------------------------

/// The projected Hermitian family V*A(ω)V.
#[derive(Clone)]
pub struct ProjectedFamily {
    parent: Arc<HermitianFamily>,
    basis: Basis,
    small_terms: Vec<CMat>,
}

impl ProjectedFamily {
    /// Form all m×m projected coefficients.
    pub fn project(parent: Arc<HermitianFamily>, basis: Basis) -> Result<Self> {
        if basis.dim() == 0 {
            return Err(Error::EmptySubspace);
        }
        if basis.n() != parent.n() {
            return Err(Error::DimensionMismatch(format!(
                "basis ambient dimension {} does not match family dimension {}",
                basis.n(),
                parent.n()
            )));
        }
        let small_terms = parent
            .terms()
            .iter()
            .map(|(_, mat)| {
                let mut t = project_term(mat, basis.columns());
                t.hermitize();
                t
            })
            .collect();
        Ok(ProjectedFamily {
            parent,
            basis,
            small_terms,
        })
    }

    /// Extend to a basis that prefix-extends the current one, computing only
    /// the new rows and columns of each coefficient.
    pub fn extend(&self, new_basis: Basis) -> Result<Self> {
        let m_old = self.basis.dim();
        let m_new = new_basis.dim();
        if m_new < m_old {
            return Err(Error::Invalid(
                "extended basis is smaller than the current one".into(),
            ));
        }
        for j in 0..m_old {
            let a = self.basis.col(j);
            let b = new_basis.col(j);
            let diff: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if diff > 1e-12 {
                return Err(Error::Invalid(format!(
                    "extended basis does not prefix-extend: column {j} differs by {diff:.3e}"
                )));
            }
        }
        if m_new == m_old {
            return Ok(self.clone());
        }
        let mut small_terms = Vec::with_capacity(self.small_terms.len());
        for ((_, mat), old) in self.parent.terms().iter().zip(&self.small_terms) {
            // [B; C] = V_total* (A · V_new); the new rows follow by symmetry.
            let image = term_image(mat, new_basis.columns(), m_old);
            let block = new_basis.columns().adj_matmul(&image);
            let mut t = CMat::zeros(m_new, m_new);
            for j in 0..m_old {
                for i in 0..m_old {
                    t[(i, j)] = old[(i, j)];
                }
            }
            for j in 0..m_new - m_old {
                for i in 0..m_new {
                    t[(i, m_old + j)] = block[(i, j)];
                    t[(m_old + j, i)] = block[(i, j)].conj();
                }
            }
            t.hermitize();
            small_terms.push(t);
        }
        Ok(ProjectedFamily {
            parent: Arc::clone(&self.parent),
            basis: new_basis,
            small_terms,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn parent(&self) -> &Arc<HermitianFamily> {
        &self.parent
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn small_terms(&self) -> &[CMat] {
        &self.small_terms
    }

    /// Assemble the m×m matrix at ω.
    pub fn assemble(&self, omega: &[f64]) -> CMat {
        let coeffs = self.parent.coefficients(omega);
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for (t, &c) in self.small_terms.iter().zip(&coeffs) {
            if c != 0.0 {
                out.add_scaled(C64::new(c, 0.0), t);
            }
        }
        out.hermitize();
        out
    }

    /// J-th largest eigenvalue of the reduced matrix with its gradient,
    /// ∂λ_J/∂ω_q = ⟨(∂A^V/∂ω_q) y, y⟩ at the eigenvector y.
    pub fn value_grad(&self, omega: &[f64], j: usize) -> Result<ValueGrad> {
        let m = self.dim();
        if j == 0 || j > m {
            return Err(Error::InvalidOptions(format!(
                "need 1 <= J <= m, got J={j}, m={m}"
            )));
        }
        let pairs = dense_herm_eig(&self.assemble(omega))?;
        let value = pairs.values[j - 1];
        let y = pairs.vectors.col(j - 1);
        let d = self.parent.d();
        let mut gradient = Vec::with_capacity(d);
        let mut ty = vec![C64::new(0.0, 0.0); m];
        for q in 0..d {
            let dcoeffs = self.parent.derivative_coefficients(omega, q);
            let mut acc = 0.0;
            for (t, &c) in self.small_terms.iter().zip(&dcoeffs) {
                if c != 0.0 {
                    t.matvec(y, &mut ty);
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..m {
                        s += y[i].conj() * ty[i];
                    }
                    acc += c * s.re;
                }
            }
            gradient.push(acc);
        }
        let gap = pairs
            .values
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j - 1)
            .map(|(_, v)| (v - value).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(ValueGrad {
            value,
            gradient,
            gap,
            multiplicity_flag: near_multiple(gap, value),
        })
    }
}

// ---------------------------------------------------------------------------
// Two-sided projection for largest singular values
// ---------------------------------------------------------------------------

/// The two-sided restriction U*B(ω)V.
#[derive(Clone)]
pub struct TwoSidedProjection {
    parent: Arc<GeneralFamily>,
    left: Basis,
    right: Basis,
    small_terms: Vec<CMat>,
}

impl TwoSidedProjection {
    pub fn project(parent: Arc<GeneralFamily>, left: Basis, right: Basis) -> Result<Self> {
        if left.dim() == 0 || right.dim() == 0 {
            return Err(Error::EmptySubspace);
        }
        if left.n() != parent.p() || right.n() != parent.q() {
            return Err(Error::DimensionMismatch(
                "left/right basis sizes do not match the family".into(),
            ));
        }
        let small_terms = parent
            .terms()
            .iter()
            .map(|(_, mat)| {
                let image = term_image(mat, right.columns(), 0);
                left.columns().adj_matmul(&image)
            })
            .collect();
        Ok(TwoSidedProjection {
            parent,
            left,
            right,
            small_terms,
        })
    }

    pub fn left(&self) -> &Basis {
        &self.left
    }

    pub fn right(&self) -> &Basis {
        &self.right
    }

    pub fn assemble(&self, omega: &[f64]) -> CMat {
        let coeffs = self.parent.coefficients(omega);
        let mut out = CMat::zeros(self.left.dim(), self.right.dim());
        for (t, &c) in self.small_terms.iter().zip(&coeffs) {
            if c != 0.0 {
                out.add_scaled(C64::new(c, 0.0), t);
            }
        }
        out
    }

    /// J-th largest singular value of U*B(ω)V with gradient
    /// ∂σ_J/∂ω_q = Re(u*(∂B^{U,V}/∂ω_q)v).
    pub fn value_grad(&self, omega: &[f64], j: usize) -> Result<ValueGrad> {
        let k = self.left.dim().min(self.right.dim());
        if j == 0 || j > k {
            return Err(Error::InvalidOptions(format!(
                "need 1 <= J <= min(m_u, m_v), got J={j}, min={k}"
            )));
        }
        let assembled = self.assemble(omega);
        let (sigma, u, v) = small_svd(&assembled)?;
        let value = sigma[j - 1];
        let uj = u.col(j - 1);
        let vj = v.col(j - 1);
        let d = self.parent.d();
        let mut gradient = Vec::with_capacity(d);
        let mut tv = vec![C64::new(0.0, 0.0); self.left.dim()];
        for q in 0..d {
            let dcoeffs: Vec<f64> = self
                .parent
                .terms()
                .iter()
                .map(|(f, _)| f.partial(omega, q))
                .collect();
            let mut acc = 0.0;
            for (t, &c) in self.small_terms.iter().zip(&dcoeffs) {
                if c != 0.0 {
                    t.matvec(vj, &mut tv);
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..tv.len() {
                        s += uj[i].conj() * tv[i];
                    }
                    acc += c * s.re;
                }
            }
            gradient.push(acc);
        }
        let gap = sigma
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j - 1)
            .map(|(_, s)| (s - value).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(ValueGrad {
            value,
            gradient,
            gap,
            multiplicity_flag: near_multiple(gap, value),
        })
    }
}

// ---------------------------------------------------------------------------
// Right-sided projection for smallest singular values
// ---------------------------------------------------------------------------

/// The right restriction B(ω)V, held as the triangular factor of the stacked
/// tall products [B_1V … B_κV] = Q̂·R̂ so that the singular values of B(ω)V
/// equal those of the small matrix R̂·(f(ω) ⊗ I_m), with no Gram squaring.
///
/// Built either from an explicit family or from externally computed tall
/// images (the pencil-backed problems produce B_ℓV through linear solves).
#[derive(Clone)]
pub struct RightProjection {
    fields: Vec<ScalarField>,
    d: usize,
    basis: Basis,
    /// R̂, (κm)×(κm) upper triangular (thin).
    stacked_r: CMat,
    /// Gram cross terms V*B_ℓ*B_kV, kept for the route-equivalence checks.
    gram_terms: Vec<Vec<CMat>>,
}

impl RightProjection {
    pub fn project(parent: Arc<GeneralFamily>, basis: Basis) -> Result<Self> {
        if basis.n() != parent.q() {
            return Err(Error::DimensionMismatch(
                "right basis does not match the family column count".into(),
            ));
        }
        let images: Vec<CMat> = parent
            .terms()
            .iter()
            .map(|(_, mat)| term_image(mat, basis.columns(), 0))
            .collect();
        let fields: Vec<ScalarField> =
            parent.terms().iter().map(|(f, _)| f.clone()).collect();
        RightProjection::from_parts(fields, parent.d(), images, basis)
    }

    /// Assemble from per-term tall images B_ℓ·V.
    pub fn from_parts(
        fields: Vec<ScalarField>,
        d: usize,
        images: Vec<CMat>,
        basis: Basis,
    ) -> Result<Self> {
        if basis.dim() == 0 {
            return Err(Error::EmptySubspace);
        }
        if fields.len() != images.len() || fields.is_empty() {
            return Err(Error::Invalid(
                "one tall image per field is required".into(),
            ));
        }
        for img in &images {
            if img.ncols() != basis.dim() {
                return Err(Error::DimensionMismatch(
                    "tall image column count does not match the basis".into(),
                ));
            }
        }
        let image_refs: Vec<&CMat> = images.iter().collect();
        let stacked = CMat::hstack(&image_refs);
        let (_, stacked_r) = thin_qr(&stacked);
        let kappa = images.len();
        let mut gram_terms = Vec::with_capacity(kappa);
        for l in 0..kappa {
            let mut row = Vec::with_capacity(kappa);
            for k in 0..kappa {
                row.push(images[l].adj_matmul(&images[k]));
            }
            gram_terms.push(row);
        }
        Ok(RightProjection {
            fields,
            d,
            basis,
            stacked_r,
            gram_terms,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn coefficients(&self, omega: &[f64]) -> Vec<f64> {
        self.fields.iter().map(|f| f.value(omega)).collect()
    }

    /// R̂·(f(ω) ⊗ I_m): a (κm)×m matrix with the singular values of B(ω)V.
    pub fn assemble_small(&self, omega: &[f64]) -> CMat {
        let coeffs = self.coefficients(omega);
        self.weighted_small(&coeffs)
    }

    fn weighted_small(&self, coeffs: &[f64]) -> CMat {
        let m = self.dim();
        let rows = self.stacked_r.nrows();
        let mut out = CMat::zeros(rows, m);
        for (l, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let cc = C64::new(c, 0.0);
            for j in 0..m {
                let src = self.stacked_r.col(l * m + j);
                let dst = out.col_mut(j);
                for i in 0..rows {
                    dst[i] += cc * src[i];
                }
            }
        }
        out
    }

    /// The assembled Gram matrix V*B(ω)*B(ω)V; the equivalence
    /// eig(Gram) = σ(B(ω)V)² is exercised by tests.
    pub fn assemble_gram(&self, omega: &[f64]) -> CMat {
        let coeffs = self.coefficients(omega);
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for (l, row) in self.gram_terms.iter().enumerate() {
            for (k, t) in row.iter().enumerate() {
                let c = coeffs[l] * coeffs[k];
                if c != 0.0 {
                    out.add_scaled(C64::new(c, 0.0), t);
                }
            }
        }
        out.hermitize();
        out
    }

    /// J-th smallest singular value of B(ω)V with its gradient
    /// ∂σ/∂ω_q = Re(u*·R̂(∂f/∂ω_q ⊗ I)·v) on the small factor.
    pub fn value_grad(&self, omega: &[f64], j: usize) -> Result<ValueGrad> {
        let m = self.dim();
        if j == 0 || j > m {
            return Err(Error::InvalidOptions(format!(
                "need 1 <= J <= m, got J={j}, m={m}"
            )));
        }
        let small = self.assemble_small(omega);
        let (sigma, u, v) = small_svd(&small)?;
        // σ ascending from the tail: J-th smallest is index m-j.
        let idx = m - j;
        let value = sigma[idx];
        let uj = u.col(idx);
        let vj = v.col(idx);
        let d = self.d;
        let mut gradient = Vec::with_capacity(d);
        for q in 0..d {
            let dcoeffs: Vec<f64> = self
                .fields
                .iter()
                .map(|f| f.partial(omega, q))
                .collect();
            let dsmall = self.weighted_small(&dcoeffs);
            let mut tv = vec![C64::new(0.0, 0.0); dsmall.nrows()];
            dsmall.matvec(vj, &mut tv);
            let mut s = C64::new(0.0, 0.0);
            for i in 0..tv.len() {
                s += uj[i].conj() * tv[i];
            }
            gradient.push(s.re);
        }
        let gap = sigma
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, s)| (s - value).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(ValueGrad {
            value,
            gradient,
            gap,
            multiplicity_flag: near_multiple(gap, value),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis::{DEFAULT_DROP_TOL, expand_basis};
    use crate::model::ScalarField;

    fn unit(n: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn identity_basis_reproduces_terms() {
        let a = CMat::from_real_rows(&[vec![2.0, 1.0], vec![1.0, -1.0]]);
        let fam = Arc::new(
            HermitianFamily::new(vec![(ScalarField::constant(), a.clone().into())], 1).unwrap(),
        );
        let basis = Basis::from_orthonormal(CMat::eye(2)).unwrap();
        let proj = ProjectedFamily::project(fam, basis).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                assert!((proj.small_terms()[0][(i, j)] - a[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rayleigh_quotient_case() {
        // Basis = one eigenvector of a diagonal family: the 1×1 term is the
        // eigenvalue.
        let a = CMat::real_diag(&[3.0, 1.0]);
        let fam = Arc::new(
            HermitianFamily::new(vec![(ScalarField::constant(), a.into())], 1).unwrap(),
        );
        let basis =
            Basis::from_candidates(2, &[unit(2, 0)], DEFAULT_DROP_TOL).unwrap();
        let proj = ProjectedFamily::project(fam, basis).unwrap();
        assert!((proj.small_terms()[0][(0, 0)] - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn extend_matches_fresh_projection() {
        let mut h = CMat::zeros(6, 6);
        for j in 0..6 {
            for i in 0..=j {
                let v = if i == j {
                    C64::new(((i * 5 + j * 3) % 7) as f64, 0.0)
                } else {
                    C64::new(((i * 5 + j * 3) % 7) as f64, (i as f64 - j as f64) * 0.2)
                };
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let fam = Arc::new(
            HermitianFamily::new(
                vec![
                    (ScalarField::constant(), h.into()),
                    (ScalarField::affine(0), CMat::eye(6).into()),
                ],
                1,
            )
            .unwrap(),
        );
        // Project on 2 columns and extend to 4.
        let b2 = Basis::from_candidates(6, &[unit(6, 0), unit(6, 3)], DEFAULT_DROP_TOL).unwrap();
        let proj2 = ProjectedFamily::project(Arc::clone(&fam), b2.clone()).unwrap();
        let b4 = expand_basis(&b2, &[unit(6, 1), unit(6, 5)], DEFAULT_DROP_TOL).unwrap();
        let ext = proj2.extend(b4.clone()).unwrap();
        let fresh = ProjectedFamily::project(fam, b4).unwrap();
        for (a, b) in ext.small_terms().iter().zip(fresh.small_terms()) {
            for j in 0..4 {
                for i in 0..4 {
                    assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-12);
                }
            }
        }
        // Zero-column extension returns the same projection.
        let same = proj2.extend(b2).unwrap();
        assert_eq!(same.dim(), 2);
    }

    #[test]
    fn constant_family_zero_gradient() {
        let fam = Arc::new(
            HermitianFamily::new(
                vec![(ScalarField::constant(), CMat::real_diag(&[2.0, 1.0]).into())],
                1,
            )
            .unwrap(),
        );
        let basis = Basis::from_orthonormal(CMat::eye(2)).unwrap();
        let proj = ProjectedFamily::project(fam, basis).unwrap();
        let vg = proj.value_grad(&[0.3], 1).unwrap();
        assert!((vg.value - 2.0).abs() < 1e-14);
        assert!(vg.gradient[0].abs() < 1e-14);
    }

    #[test]
    fn affine_diag_analytic_gradient() {
        // diag(ω, 1−ω): λ_1 at ω = 0 is 1 with dλ/dω = −1.
        let e00 = CMat::real_diag(&[1.0, 0.0]);
        let e11 = CMat::real_diag(&[0.0, 1.0]);
        let mut c = CMat::zeros(2, 2);
        c[(1, 1)] = C64::new(1.0, 0.0);
        let fam = Arc::new(
            HermitianFamily::new(
                vec![
                    (ScalarField::constant(), e11.into()),
                    (ScalarField::affine(0), e00.clone().into()),
                    (
                        ScalarField::new("neg-affine", |w| -w[0], |w| {
                            let mut g = vec![0.0; w.len()];
                            g[0] = -1.0;
                            g
                        }),
                        c.into(),
                    ),
                ],
                1,
            )
            .unwrap(),
        );
        let basis = Basis::from_orthonormal(CMat::eye(2)).unwrap();
        let proj = ProjectedFamily::project(fam, basis).unwrap();
        let vg = proj.value_grad(&[0.0], 1).unwrap();
        assert!((vg.value - 1.0).abs() < 1e-14);
        assert!((vg.gradient[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_projection_routes_agree() {
        // eig of the reduced Gram equals σ² of the small factor.
        let b0 = CMat::from_fn(8, 5, |i, j| C64::new((i + j) as f64 * 0.3, (i as f64) * 0.1));
        let b1 = CMat::from_fn(8, 5, |i, j| {
            C64::new(if i == j { 1.0 } else { 0.0 }, (j as f64) * 0.05)
        });
        let fam = Arc::new(
            GeneralFamily::new(
                vec![
                    (ScalarField::constant(), b0.into()),
                    (ScalarField::affine(0), b1.into()),
                ],
                1,
            )
            .unwrap(),
        );
        let basis =
            Basis::from_candidates(5, &[unit(5, 0), unit(5, 2), unit(5, 4)], DEFAULT_DROP_TOL)
                .unwrap();
        let proj = RightProjection::project(fam, basis).unwrap();
        let omega = [0.37];
        let (sig, _, _) = small_svd(&proj.assemble_small(&omega)).unwrap();
        let gram = dense_herm_eig(&proj.assemble_gram(&omega)).unwrap();
        for (s, g) in sig.iter().zip(gram.values.iter()) {
            assert!(
                (s * s - g).abs() <= 1e-10 * (1.0 + g.abs()),
                "σ²={} vs gram {}",
                s * s,
                g
            );
        }
    }
}
