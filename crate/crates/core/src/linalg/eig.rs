//! Dense Hermitian eigendecomposition and the small SVD built on it.
//!
//! The reduced problems are dense and tiny, so a classical two-phase solver is
//! used: unitary Householder reduction of the Hermitian matrix to a real
//! symmetric tridiagonal, followed by implicit-shift QL with Wilkinson shifts
//! accumulating the transformations into the complex eigenvector matrix.

use crate::dense::{C64, CMat, vec_norm};
use crate::model::EigenPairs;
use crate::{Error, Result};

/// Hermitian deviation (relative to the largest entry) accepted on input.
const INPUT_HERM_TOL: f64 = 1e-10;

/// Full spectrum of a small complex Hermitian matrix, descending.
pub fn dense_herm_eig(m: &CMat) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
            residuals: Vec::new(),
        });
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let dev = m.hermitian_deviation();
    if dev > INPUT_HERM_TOL * scale {
        return Err(Error::NotHermitian {
            deviation: dev / scale,
            limit: INPUT_HERM_TOL,
        });
    }
    let mut a = m.clone();
    a.hermitize();

    let (mut d, mut e, mut q) = tridiagonalize(&mut a);
    ql_implicit(&mut d, &mut e, &mut q)?;

    // Sort descending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        vectors.set_col(jnew, q.col(jold));
    }

    // Exact residuals against the (hermitized) input.
    let mut residuals = Vec::with_capacity(n);
    let mut av = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        a.matvec(vectors.col(j), &mut av);
        let lam = values[j];
        let mut r2 = 0.0;
        for i in 0..n {
            r2 += (av[i] - lam * vectors[(i, j)]).norm_sqr();
        }
        residuals.push(r2.sqrt());
    }

    Ok(EigenPairs {
        values,
        vectors,
        residuals,
    })
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form. Returns (diagonal, subdiagonal, Q) with A = Q T Q*.
fn tridiagonalize(a: &mut CMat) -> (Vec<f64>, Vec<f64>, CMat) {
    let n = a.nrows();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(n.saturating_sub(2));
    let mut subdiag = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];

    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = vec_norm(&v);
        if xnorm == 0.0 {
            reflectors.push(Vec::new());
            subdiag[k] = C64::new(0.0, 0.0);
            continue;
        }
        let phase = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm <= f64::EPSILON * xnorm {
            reflectors.push(Vec::new());
            subdiag[k] = alpha;
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }

        // Two-sided update of the trailing block: with u = 2 A₂₂ v and
        // w = u − (v*u) v,  H A₂₂ H = A₂₂ − v w* − w v*.
        let blk = n - k - 1;
        let mut u = vec![C64::new(0.0, 0.0); blk];
        for j in 0..blk {
            let col = a.col(k + 1 + j);
            let vj2 = 2.0 * v[j];
            if vj2 != C64::new(0.0, 0.0) {
                for i in 0..blk {
                    u[i] += col[k + 1 + i] * vj2;
                }
            }
        }
        let mut vu = C64::new(0.0, 0.0);
        for i in 0..blk {
            vu += v[i].conj() * u[i];
        }
        let w: Vec<C64> = (0..blk).map(|i| u[i] - vu * v[i]).collect();
        for j in 0..blk {
            let wjc = w[j].conj();
            let vjc = v[j].conj();
            let col = a.col_mut(k + 1 + j);
            for i in 0..blk {
                col[k + 1 + i] -= v[i] * wjc + w[i] * vjc;
            }
        }

        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
        subdiag[k] = alpha;
        reflectors.push(v);
    }
    if n >= 2 {
        subdiag[n - 2] = a[(n - 1, n - 2)];
    }

    // Q = H_0 H_1 ... H_{n-3}, applied to the identity from the last
    // reflector backwards.
    let mut q = CMat::eye(n);
    for k in (0..reflectors.len()).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        let blk = n - k - 1;
        for c in 0..n {
            let col = q.col_mut(c);
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..blk {
                dot += v[i].conj() * col[k + 1 + i];
            }
            let f = 2.0 * dot;
            if f != C64::new(0.0, 0.0) {
                for i in 0..blk {
                    col[k + 1 + i] -= f * v[i];
                }
            }
        }
    }

    // Phase-scale so the subdiagonal becomes real nonnegative:
    // θ_{k+1} = θ_k · phase(subdiag_k), T_real = D* T D, Q ← Q D.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    let mut theta = C64::new(1.0, 0.0);
    for k in 0..n.saturating_sub(1) {
        let alpha = subdiag[k];
        let mag = alpha.norm();
        e[k] = mag;
        let phase = if mag > 0.0 {
            alpha / mag
        } else {
            C64::new(1.0, 0.0)
        };
        // Column 0 keeps θ_0 = 1; column k+1 gets θ_{k+1} = θ_k · phase.
        theta *= phase;
        let col = q.col_mut(k + 1);
        for z in col.iter_mut() {
            *z *= theta;
        }
    }
    (d, e, q)
}

/// Implicit-shift QL with Wilkinson shifts on a real symmetric tridiagonal,
/// accumulating the rotations into the complex columns of `q`.
fn ql_implicit(d: &mut [f64], e_in: &mut [f64], q: &mut CMat) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // One scratch slot past the end: the rotation sweep writes e[i+1] for
    // i up to m−1 with m ≤ n−1.
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(e_in);
    let e = &mut e[..];
    let nq = q.nrows();
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find the first negligible subdiagonal element at or after l.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NonConvergence {
                    context: format!("implicit QL stalled at eigenvalue {l} of {n}"),
                    best_residual: e[l].abs(),
                });
            }
            // Wilkinson shift from the trailing 2x2.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Rotate eigenvector columns i and i+1.
                for k in 0..nq {
                    let zf = q[(k, i + 1)];
                    let zg = q[(k, i)];
                    q[(k, i + 1)] = s * zg + c * zf;
                    q[(k, i)] = c * zg - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Singular value decomposition of a small dense matrix via the augmented
/// Hermitian form [[0, S], [S*, 0]]. Returns min(p, q) triplets, σ descending,
/// with column-orthonormal U (p×k) and V (q×k).
pub fn small_svd(s: &CMat) -> Result<(Vec<f64>, CMat, CMat)> {
    let p = s.nrows();
    let q = s.ncols();
    let k = p.min(q);
    if k == 0 {
        return Ok((Vec::new(), CMat::zeros(p, 0), CMat::zeros(q, 0)));
    }
    let mut aug = CMat::zeros(p + q, p + q);
    for j in 0..q {
        for i in 0..p {
            aug[(i, p + j)] = s[(i, j)];
            aug[(p + j, i)] = s[(i, j)].conj();
        }
    }
    let pairs = dense_herm_eig(&aug)?;
    // The top k eigenvalues are the singular values; eigenvectors split as
    // (u; v)/√2.
    let mut sigma = Vec::with_capacity(k);
    let mut u = CMat::zeros(p, k);
    let mut v = CMat::zeros(q, k);
    for j in 0..k {
        sigma.push(pairs.values[j].max(0.0));
        let z = pairs.vectors.col(j);
        let mut uc: Vec<C64> = z[..p].to_vec();
        let mut vc: Vec<C64> = z[p..].to_vec();
        let un = vec_norm(&uc);
        let vn = vec_norm(&vc);
        if un > 1e-8 && vn > 1e-8 {
            for z in uc.iter_mut() {
                *z /= un;
            }
            for z in vc.iter_mut() {
                *z /= vn;
            }
        } else {
            // Degenerate (σ ≈ 0) split; keep whichever side survived and
            // complete the other against the columns found so far.
            if vn > 1e-8 {
                for z in vc.iter_mut() {
                    *z /= vn;
                }
            } else {
                vc = complete_orthonormal(&v, j, q);
            }
            if un > 1e-8 {
                for z in uc.iter_mut() {
                    *z /= un;
                }
            } else {
                uc = complete_orthonormal(&u, j, p);
            }
        }
        u.set_col(j, &uc);
        v.set_col(j, &vc);
    }
    Ok((sigma, u, v))
}

/// A unit vector orthogonal to the first `j` columns of `basis`.
fn complete_orthonormal(basis: &CMat, j: usize, n: usize) -> Vec<C64> {
    for trial in 0..n {
        let mut cand = vec![C64::new(0.0, 0.0); n];
        cand[trial] = C64::new(1.0, 0.0);
        for c in 0..j {
            let col = basis.col(c);
            let dot = crate::dense::cdot(col, &cand);
            crate::dense::axpy(-dot, col, &mut cand);
        }
        let norm = vec_norm(&cand);
        if norm > 1e-6 {
            for z in cand.iter_mut() {
                *z /= norm;
            }
            return cand;
        }
    }
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[0] = C64::new(1.0, 0.0);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let m = CMat::real_diag(&[2.0, 1.0, 0.0]);
        let p = dense_herm_eig(&m).unwrap();
        assert_eq!(p.values, vec![2.0, 1.0, 0.0]);
        for j in 0..3 {
            // Columns of a permuted identity.
            let col = p.vectors.col(j);
            let nz: Vec<usize> = (0..3).filter(|&i| col[i].norm() > 1e-12).collect();
            assert_eq!(nz.len(), 1);
        }
    }

    #[test]
    fn pauli_x() {
        let m = CMat::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = dense_herm_eig(&m).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-14);
        assert!((p.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            dense_herm_eig(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        // Deterministic pseudo-random Hermitian matrix.
        let n = 12;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = CMat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let z = if i == j {
                    C64::new(next(), 0.0)
                } else {
                    C64::new(next(), next())
                };
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let p = dense_herm_eig(&m).unwrap();
        // Unitarity.
        let qa = p.vectors.adj_matmul(&p.vectors);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (qa[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-11,
                    "Q*Q deviates at ({i},{j})"
                );
            }
        }
        // Reconstruction ‖M − QΛQ*‖.
        let lam = CMat::real_diag(&p.values);
        let rec = p.vectors.matmul(&lam).matmul(&p.vectors.conj_transpose());
        let mut err: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                err = err.max((rec[(i, j)] - m[(i, j)]).norm());
            }
        }
        assert!(err < 1e-10 * m.max_abs().max(1.0), "reconstruction {err:.3e}");
        // Descending order.
        for j in 1..n {
            assert!(p.values[j - 1] >= p.values[j] - 1e-14);
        }
    }

    #[test]
    fn svd_of_nilpotent() {
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = C64::new(1.0, 0.0);
        let (sig, u, v) = small_svd(&b).unwrap();
        assert!((sig[0] - 1.0).abs() < 1e-14);
        assert!(sig[1].abs() < 1e-14);
        // σ=1 comes with v = e_2, u = e_1 up to phase.
        assert!(v[(1, 0)].norm() > 1.0 - 1e-12);
        assert!(u[(0, 0)].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn svd_rectangular_consistency() {
        let b = CMat::from_fn(5, 3, |i, j| {
            C64::new((i as f64 - j as f64) * 0.3, ((i * j) as f64).sin())
        });
        let (sig, u, v) = small_svd(&b).unwrap();
        assert_eq!(sig.len(), 3);
        for j in 0..3 {
            let mut bv = vec![C64::new(0.0, 0.0); 5];
            b.matvec(v.col(j), &mut bv);
            let mut r = 0.0;
            for i in 0..5 {
                r += (bv[i] - sig[j] * u[(i, j)]).norm_sqr();
            }
            assert!(r.sqrt() < 1e-12 * b.max_abs().max(1.0), "pair {j}");
        }
    }
}
