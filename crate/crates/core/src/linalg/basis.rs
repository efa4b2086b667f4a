//! Orthonormal basis maintenance and subspace distance.

use crate::dense::{C64, CMat, axpy, cdot, vec_norm};
use crate::{Error, Result};

/// Default drop tolerance for candidate directions that are numerically
/// dependent on the current basis.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// An n×m matrix with orthonormal columns spanning the projection subspace.
#[derive(Clone, Debug)]
pub struct Basis {
    columns: CMat,
}

impl Basis {
    /// Empty basis over C^n.
    pub fn empty(n: usize) -> Self {
        Basis {
            columns: CMat::zeros(n, 0),
        }
    }

    /// Orthonormalize the given candidates from scratch.
    pub fn from_candidates(n: usize, candidates: &[Vec<C64>], drop_tol: f64) -> Result<Self> {
        expand_basis(&Basis::empty(n), candidates, drop_tol)
    }

    /// Wrap columns that are already orthonormal; verified to 1e-12.
    pub fn from_orthonormal(columns: CMat) -> Result<Self> {
        let gram = columns.adj_matmul(&columns);
        let m = columns.ncols();
        for i in 0..m {
            for j in 0..m {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - C64::new(expect, 0.0)).norm() > 1e-12 {
                    return Err(Error::Invalid(
                        "columns are not orthonormal to 1e-12".into(),
                    ));
                }
            }
        }
        Ok(Basis { columns })
    }

    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &CMat {
        &self.columns
    }

    pub fn col(&self, j: usize) -> &[C64] {
        self.columns.col(j)
    }

    /// ‖V*V − I‖_max, the orthonormality defect.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.columns.adj_matmul(&self.columns);
        let m = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - C64::new(expect, 0.0)).norm());
            }
        }
        dev
    }
}

/// Gram-Schmidt expansion with one full reorthogonalization pass.
///
/// Candidates whose residual after projection falls below
/// `drop_tol · ‖candidate‖` are discarded; the existing columns are never
/// touched, so the result prefix-extends `basis`.
pub fn expand_basis(basis: &Basis, candidates: &[Vec<C64>], drop_tol: f64) -> Result<Basis> {
    let n = basis.n();
    let mut columns = basis.columns.clone();
    for cand in candidates {
        if cand.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "candidate length {} does not match basis ambient dimension {n}",
                cand.len()
            )));
        }
        let orig_norm = vec_norm(cand);
        if orig_norm == 0.0 {
            continue;
        }
        let mut r = cand.clone();
        // Two projection passes: classical Gram-Schmidt plus one full
        // reorthogonalization sweep.
        for _ in 0..2 {
            for j in 0..columns.ncols() {
                let col = columns.col(j);
                let dot = cdot(col, &r);
                axpy(-dot, col, &mut r);
            }
        }
        let rnorm = vec_norm(&r);
        if rnorm < drop_tol * orig_norm {
            continue;
        }
        for z in r.iter_mut() {
            *z /= rnorm;
        }
        columns.push_col(&r);
    }
    Ok(Basis { columns })
}

/// Distance between equal-dimensional subspaces: the sine of the largest
/// principal angle, sqrt(1 − σ_min(U*V)²).
///
/// Evaluated through the equivalent form ‖(I − VV*)U‖₂ — the residual of U
/// after projection onto span(V) — which stays accurate for small angles
/// where the direct formula cancels.
pub fn subspace_distance(u: &Basis, v: &Basis) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace distance needs equal dimensions, got {} and {}",
            u.dim(),
            v.dim()
        )));
    }
    if u.n() != v.n() {
        return Err(Error::DimensionMismatch(
            "subspaces live in different ambient spaces".into(),
        ));
    }
    if u.dim() == 0 {
        return Ok(0.0);
    }
    // W = U − V (V*U), computed in the ambient space.
    let m = v.columns().adj_matmul(u.columns());
    let mut w = u.columns().clone();
    let vm = v.columns().matmul(&m);
    w.add_scaled(crate::dense::C64::new(-1.0, 0.0), &vm);
    // σ_max(W) from the small Gram matrix of W.
    let gram = w.adj_matmul(&w);
    let pairs = crate::linalg::eig::dense_herm_eig(&gram)?;
    let lam = pairs.values.first().copied().unwrap_or(0.0).max(0.0);
    Ok(lam.sqrt().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn dependent_candidate_dropped() {
        let b = Basis::from_candidates(3, &[e(3, 0)], DEFAULT_DROP_TOL).unwrap();
        let b2 = expand_basis(&b, &[e(3, 0)], DEFAULT_DROP_TOL).unwrap();
        assert_eq!(b2.dim(), 1);
    }

    #[test]
    fn gram_schmidt_splits_component() {
        let b = Basis::from_candidates(3, &[e(3, 0)], DEFAULT_DROP_TOL).unwrap();
        let mut cand = e(3, 0);
        cand[1] = C64::new(1.0, 0.0);
        let b2 = expand_basis(&b, &[cand], DEFAULT_DROP_TOL).unwrap();
        assert_eq!(b2.dim(), 2);
        // Second column reduces to e_2.
        assert!((b2.col(1)[1].norm() - 1.0).abs() < 1e-14);
        assert!(b2.col(1)[0].norm() < 1e-14);
        // Prefix stability.
        assert!((b2.col(0)[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn distance_known_angles() {
        let u = Basis::from_candidates(2, &[e(2, 0)], DEFAULT_DROP_TOL).unwrap();
        let v = Basis::from_candidates(2, &[e(2, 1)], DEFAULT_DROP_TOL).unwrap();
        assert!((subspace_distance(&u, &u).unwrap()).abs() < 1e-14);
        assert!((subspace_distance(&u, &v).unwrap() - 1.0).abs() < 1e-14);
        let diag = Basis::from_candidates(
            2,
            &[vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]],
            DEFAULT_DROP_TOL,
        )
        .unwrap();
        let d = subspace_distance(&u, &diag).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let u = Basis::from_candidates(3, &[e(3, 0)], DEFAULT_DROP_TOL).unwrap();
        let v = Basis::from_candidates(3, &[e(3, 0), e(3, 1)], DEFAULT_DROP_TOL).unwrap();
        assert!(subspace_distance(&u, &v).is_err());
    }
}
