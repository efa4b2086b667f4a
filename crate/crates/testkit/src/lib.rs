//! Independent numerical oracles and seeded problem generators used by the
//! test suites. Nothing here shares algorithmic code with the solvers it
//! checks: the eigensolver oracle is a cyclic Jacobi sweep, the SVD oracle
//! runs Jacobi on the augmented form, and the optimization oracles are grid
//! scans with golden-section refinement.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specopt_core::CMat;
use specopt_core::model::{HermitianFamily, MatrixStore, ScalarField};

// ---------------------------------------------------------------------------
// Jacobi eigensolver oracle
// ---------------------------------------------------------------------------

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. Returns (values descending, unitary eigenvector matrix).
pub fn jacobi_herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    assert!(m.is_square());
    let n = m.nrows();
    let mut a = m.clone();
    a.hermitize();
    let mut q = CMat::eye(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for r in p + 1..n {
                off = off.max(a[(p, r)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr.norm() <= 1e-18 * scale {
                    continue;
                }
                // Unitary 2x2 rotation annihilating a[p][r]:
                // with app, arr real, apr complex, use the phase of apr to
                // reduce to the real symmetric case.
                let app = a[(p, p)].re;
                let arr = a[(r, r)].re;
                let abs = apr.norm();
                let phase = apr / abs;
                let tau = (arr - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns p and r transform with G = [[c, -s·conj(phase)];
                // [s·phase, c]] ... apply A <- G* A G, Q <- Q G.
                let sp = s * phase;
                // Update rows/cols.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - sp.conj() * akr;
                    a[(k, r)] = sp * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - sp * ark;
                    a[(r, k)] = sp.conj() * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - sp.conj() * qkr;
                    q[(k, r)] = sp * qkp + c * qkr;
                }
                // Clean the annihilated pair.
                a[(p, r)] = C64::new(0.0, 0.0);
                a[(r, p)] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut vals: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
    vals.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let mut vectors = CMat::zeros(n, n);
    for (jnew, &(_, jold)) in vals.iter().enumerate() {
        vectors.set_col(jnew, q.col(jold));
    }
    (values, vectors)
}

/// SVD oracle through Jacobi on the augmented Hermitian [[0, B], [B*, 0]].
/// Returns (σ descending, U, V) with min(p, q) triplets.
pub fn jacobi_svd(b: &CMat) -> (Vec<f64>, CMat, CMat) {
    let p = b.nrows();
    let q = b.ncols();
    let k = p.min(q);
    let mut aug = CMat::zeros(p + q, p + q);
    for j in 0..q {
        for i in 0..p {
            aug[(i, p + j)] = b[(i, j)];
            aug[(p + j, i)] = b[(i, j)].conj();
        }
    }
    let (vals, vecs) = jacobi_herm_eig(&aug);
    let mut sigma = Vec::with_capacity(k);
    let mut u = CMat::zeros(p, k);
    let mut v = CMat::zeros(q, k);
    for j in 0..k {
        sigma.push(vals[j].max(0.0));
        let z = vecs.col(j);
        let mut uc: Vec<C64> = z[..p].to_vec();
        let mut vc: Vec<C64> = z[p..].to_vec();
        let un = norm(&uc);
        let vn = norm(&vc);
        if un > 1e-12 {
            for x in uc.iter_mut() {
                *x /= un;
            }
        }
        if vn > 1e-12 {
            for x in vc.iter_mut() {
                *x /= vn;
            }
        }
        u.set_col(j, &uc);
        v.set_col(j, &vc);
    }
    (sigma, u, v)
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Seeded generators
// ---------------------------------------------------------------------------

/// Random complex Hermitian matrix with entries of unit scale.
pub fn random_hermitian(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let z = if i == j {
                C64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0)
            } else {
                C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random real symmetric matrix.
pub fn random_symmetric(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let z = C64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

/// Random complex rectangular matrix.
pub fn random_complex(p: usize, q: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(p, q, |_, _| {
        C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    })
}

/// A seeded Hermitian family A(ω) = A_0 + ω_1 A_1 + … + ω_d A_d.
pub fn random_affine_family(n: usize, d: usize, seed: u64) -> HermitianFamily {
    let mut terms: Vec<(ScalarField, MatrixStore)> = Vec::new();
    terms.push((ScalarField::constant(), random_hermitian(n, seed).into()));
    for axis in 0..d {
        terms.push((
            ScalarField::affine(axis),
            random_hermitian(n, seed.wrapping_add(1 + axis as u64)).into(),
        ));
    }
    HermitianFamily::new(terms, d).expect("random Hermitian terms")
}

/// A seeded trigonometric family cos(ω)H_1 + sin(ω)H_2 (d = 1).
pub fn random_trig_family(n: usize, seed: u64) -> HermitianFamily {
    HermitianFamily::new(
        vec![
            (ScalarField::cosine(0), random_hermitian(n, seed).into()),
            (
                ScalarField::sine(0),
                random_hermitian(n, seed.wrapping_add(7)).into(),
            ),
        ],
        1,
    )
    .expect("random Hermitian terms")
}

/// Five-point Poisson discretization on a k×k grid (n = k²), as a dense
/// real symmetric matrix.
pub fn poisson2d(k: usize) -> CMat {
    let n = k * k;
    let mut m = CMat::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            let idx = i * k + j;
            m[(idx, idx)] = C64::new(4.0, 0.0);
            if i + 1 < k {
                m[(idx, idx + k)] = C64::new(-1.0, 0.0);
                m[(idx + k, idx)] = C64::new(-1.0, 0.0);
            }
            if j + 1 < k {
                m[(idx, idx + 1)] = C64::new(-1.0, 0.0);
                m[(idx + 1, idx)] = C64::new(-1.0, 0.0);
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Grid + refinement oracles
// ---------------------------------------------------------------------------

/// Golden-section refinement of a unimodal interval [a, b].
pub fn golden_section(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Global 1-d minimization by a dense grid scan plus golden-section
/// refinement around the best grid cell. Returns (argmin, min).
pub fn grid_refine_min(
    f: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_points: usize,
) -> (f64, f64) {
    assert!(grid_points >= 3);
    let h = (hi - lo) / (grid_points - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..grid_points {
        let x = lo + h * i as f64;
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let x = golden_section(f, a, b, 120);
    (x, f(x))
}

/// Global 1-d maximization, same scheme.
pub fn grid_refine_max(
    f: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_points: usize,
) -> (f64, f64) {
    let mut neg = |x: f64| -f(x);
    let (x, v) = grid_refine_min(&mut neg, lo, hi, grid_points);
    (x, -v)
}

/// Central-difference gradient of a scalar function of several variables.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for q in 0..x.len() {
        let step = h * (1.0 + x[q].abs());
        xp[q] = x[q] + step;
        let fp = f(&xp);
        xp[q] = x[q] - step;
        let fm = f(&xp);
        xp[q] = x[q];
        g.push((fp - fm) / (2.0 * step));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diag() {
        let m = CMat::real_diag(&[3.0, -1.0, 2.0]);
        let (vals, _) = jacobi_herm_eig(&m);
        assert!((vals[0] - 3.0).abs() < 1e-13);
        assert!((vals[1] - 2.0).abs() < 1e-13);
        assert!((vals[2] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_reconstructs_random() {
        let m = random_hermitian(10, 42);
        let (vals, q) = jacobi_herm_eig(&m);
        let lam = CMat::real_diag(&vals);
        let rec = q.matmul(&lam).matmul(&q.conj_transpose());
        for j in 0..10 {
            for i in 0..10 {
                assert!((rec[(i, j)] - m[(i, j)]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn grid_refine_quadratic() {
        let mut f = |x: f64| (x - 0.3) * (x - 0.3);
        let (x, v) = grid_refine_min(&mut f, -1.0, 1.0, 101);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(v < 1e-17);
    }
}
