//! Benchmark matrix generators and one-call problem presets: the numerical
//! radius, the distance to instability, and largest-eigenvalue minimization
//! of affine families.

use std::sync::Arc;

use crate::dense::{C64, CMat};
use crate::framework::{
    Memory, RunResult, Sense, SubspaceOptions, SvSmallestSource, Variant, optimize_eig,
    optimize_sv_smallest,
};
use crate::model::{
    BoxDomain, HermitianFamily, MatrixStore, ScalarField, estimate_norm, estimate_norm_op,
};
use crate::linalg::solve::LuFactor;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Grcar matrix: Toeplitz with 1s on the main and first three superdiagonals,
/// −1s on the first subdiagonal.
pub fn grcar(n: usize) -> Result<CsrMatrix> {
    if n < 4 {
        return Err(Error::Invalid("grcar needs n >= 4".into()));
    }
    let one = C64::new(1.0, 0.0);
    let mut trip = Vec::with_capacity(5 * n);
    for i in 0..n {
        for j in i..=(i + 3).min(n - 1) {
            trip.push((i, j, one));
        }
        if i + 1 < n {
            trip.push((i + 1, i, -one));
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// Gear matrix: 1s on the super- and subdiagonal, 1 at (1, n) and −1 at
/// (n, 1) in one-based indexing.
pub fn gear(n: usize) -> Result<CsrMatrix> {
    if n < 4 {
        return Err(Error::Invalid("gear needs n >= 4".into()));
    }
    let one = C64::new(1.0, 0.0);
    let mut trip = Vec::with_capacity(2 * n + 2);
    for i in 0..n - 1 {
        trip.push((i, i + 1, one));
        trip.push((i + 1, i, one));
    }
    trip.push((0, n - 1, one));
    trip.push((n - 1, 0, -one));
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// Orr-Sommerfeld discretization for planar Poiseuille flow with step
/// h = 2/(n+1): the pencil (B_n, L_n) with
/// L_n = (1/h²)·tridiag(1, −(2+h²), 1) and B_n = (1/1000)L_n² − i(U_nL_n + 2I),
/// U_n = diag(1 − x_k²) on the interior grid x_k = −1 + k·h of (−1, 1).
///
/// The Reynolds factor 1/1000 and the grid origin −1 reproduce the reference
/// value 𝒟(A₄₀₀) = 0.001978172281 to twelve digits (cross-checked against an
/// independent dense solver); the minimizer sits near ω ≈ −0.1998.
pub fn orr_sommerfeld(n: usize) -> Result<(CsrMatrix, CsrMatrix)> {
    if n < 3 {
        return Err(Error::Invalid("orr_sommerfeld needs n >= 3".into()));
    }
    let h = 2.0 / (n as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    let diag = -(2.0 + h * h);
    let mut ltrip = Vec::with_capacity(3 * n);
    for i in 0..n {
        ltrip.push((i, i, C64::new(inv_h2 * diag, 0.0)));
        if i + 1 < n {
            ltrip.push((i, i + 1, C64::new(inv_h2, 0.0)));
            ltrip.push((i + 1, i, C64::new(inv_h2, 0.0)));
        }
    }
    let l = CsrMatrix::from_triplets(n, n, &ltrip);

    // B = (1/1000)L² − i(UL + 2I), pentadiagonal.
    let l2 = l.matmul(&l);
    let mut btrip: Vec<(usize, usize, C64)> = l2
        .iter_entries()
        .map(|(i, j, v)| (i, j, v * C64::new(1e-3, 0.0)))
        .collect();
    let minus_i = C64::new(0.0, -1.0);
    for (i, j, v) in l.iter_entries() {
        let x = -1.0 + (i as f64 + 1.0) * h;
        let u = 1.0 - x * x;
        btrip.push((i, j, minus_i * u * v));
    }
    for i in 0..n {
        btrip.push((i, i, minus_i * 2.0));
    }
    let b = CsrMatrix::from_triplets(n, n, &btrip);
    Ok((b, l))
}

/// The spectral-radius example: A_0 with entries min{k,j} off the band,
/// min{k,j}+0.1 on the first off-diagonals and 0 on the diagonal (one-based
/// k, j).
pub fn overton_base(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            let m = (i.min(j) + 1) as f64;
            let v = if i.abs_diff(j) == 1 { m + 0.1 } else { m };
            C64::new(v, 0.0)
        }
    })
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// A fully wired problem: family, box, curvature and solver options.
pub struct ProblemPreset {
    pub kind: PresetKind,
    pub box_domain: BoxDomain,
    pub options: SubspaceOptions,
    pub description: String,
}

pub enum PresetKind {
    Eigen(Arc<HermitianFamily>),
    SvSmallest(SvSmallestSource),
}

impl ProblemPreset {
    /// Run the preset to completion.
    pub fn run(&self) -> Result<RunResult> {
        match &self.kind {
            PresetKind::Eigen(family) => {
                optimize_eig(Arc::clone(family), &self.box_domain, &self.options)
            }
            PresetKind::SvSmallest(source) => {
                let cloned = match source {
                    SvSmallestSource::Family(f) => SvSmallestSource::Family(Arc::clone(f)),
                    SvSmallestSource::Pencil { b, l } => SvSmallestSource::Pencil {
                        b: Arc::clone(b),
                        l: Arc::clone(l),
                    },
                };
                optimize_sv_smallest(cloned, &self.box_domain, &self.options)
            }
        }
    }
}

/// Numerical radius r(A) = max over ω ∈ [0, 2π] of λ₁(A(ω)) with
/// A(ω) = cos(ω)(A+A*)/2 + sin(ω)(iA−iA*)/2; the curvature heuristic is
/// 2‖A‖₂ and the default procedure is the basic one without past.
pub fn numerical_radius_problem(a: &CsrMatrix) -> Result<ProblemPreset> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "numerical radius needs a square matrix".into(),
        ));
    }
    let n = a.nrows();
    let herm: Vec<(usize, usize, C64)> = a
        .iter_entries()
        .flat_map(|(i, j, v)| [(i, j, 0.5 * v), (j, i, 0.5 * v.conj())])
        .collect();
    let h1 = CsrMatrix::from_triplets(n, n, &herm);
    let skew: Vec<(usize, usize, C64)> = a
        .iter_entries()
        .flat_map(|(i, j, v)| {
            let iv = C64::new(0.0, 0.5) * v;
            [(i, j, iv), (j, i, iv.conj())]
        })
        .collect();
    let h2 = CsrMatrix::from_triplets(n, n, &skew);
    let family = Arc::new(HermitianFamily::new(
        vec![
            (ScalarField::cosine(0), MatrixStore::Sparse(h1)),
            (ScalarField::sine(0), MatrixStore::Sparse(h2)),
        ],
        1,
    )?);
    let norm = estimate_norm(&MatrixStore::Sparse(a.clone()));
    let mut options = SubspaceOptions::new(Sense::Maximize, 1, 2.0 * norm);
    options.variant = Variant::Basic;
    options.memory = Memory::Window(2);
    // The maximization only converges locally, so the preset seeds the
    // search at the best of a coarse angle scan instead of a blind start.
    options.initial_point = Some(vec![coarse_max_angle(&family, &options, 12)?]);
    Ok(ProblemPreset {
        kind: PresetKind::Eigen(family),
        box_domain: BoxDomain::interval(0.0, 2.0 * std::f64::consts::PI),
        options,
        description: format!("numerical radius, n = {n}"),
    })
}

/// Angle with the largest λ₁ over an equispaced scan of [0, 2π).
fn coarse_max_angle(
    family: &Arc<HermitianFamily>,
    options: &SubspaceOptions,
    count: usize,
) -> Result<f64> {
    let mut scan_opts = options.clone();
    // Ranking angles only needs a few digits.
    scan_opts.eig_tol = 1e-4;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..count {
        let omega = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
        let (vals, _) = crate::framework::full_eig_pairs(family, &[omega], 1, None, &scan_opts)?;
        if vals[0] > best.1 {
            best = (omega, vals[0]);
        }
    }
    Ok(best.0)
}

/// Distance to instability 𝒟(A) = min over real ω of σ_min(A − iωI), for an
/// explicit matrix A (taken as the pencil with L = I) or a pencil (B, L)
/// representing A = L⁻¹B. The curvature heuristic is −2‖A‖₂; the finite
/// search box must come from the caller. Stability of A is not verified.
pub fn distance_to_instability_problem(
    b: Arc<CsrMatrix>,
    l: Option<Arc<CsrMatrix>>,
    box_domain: BoxDomain,
) -> Result<ProblemPreset> {
    if box_domain.dim() != 1 {
        return Err(Error::InvalidOptions(
            "distance to instability runs over a one-dimensional box".into(),
        ));
    }
    let n = b.nrows();
    let l = match l {
        Some(l) => l,
        None => Arc::new(CsrMatrix::identity(n)),
    };
    // ‖A‖₂ = ‖L⁻¹B‖₂ estimated through the solves.
    let lf = LuFactor::factor_csr(&l)?;
    let norm = estimate_norm_op(
        n,
        n,
        |x, y| {
            let mut tmp = vec![C64::new(0.0, 0.0); n];
            b.matvec(x, &mut tmp);
            y.copy_from_slice(&lf.solve(&tmp));
        },
        |x, y| {
            let tmp = lf.solve_adjoint(x);
            b.matvec_adj(&tmp, y);
        },
    );
    let mut options = SubspaceOptions::new(Sense::Minimize, 1, -2.0 * norm);
    options.variant = Variant::Basic;
    options.memory = Memory::Window(2);
    Ok(ProblemPreset {
        kind: PresetKind::SvSmallest(SvSmallestSource::Pencil { b, l }),
        box_domain,
        description: format!("distance to instability, n = {n}"),
        options,
    })
}

/// Largest-eigenvalue minimization of an affine Hermitian family with the
/// curvature set to −1e-6 (the objective is convex; the slack is numerical).
pub fn min_largest_eig_problem(
    family: Arc<HermitianFamily>,
    box_domain: BoxDomain,
) -> Result<ProblemPreset> {
    if !family.is_affine() {
        return Err(Error::InvalidOptions(
            "largest-eigenvalue minimization preset needs an affine family".into(),
        ));
    }
    let n = family.n();
    let mut options = SubspaceOptions::new(Sense::Minimize, 1, -1e-6);
    options.variant = Variant::Basic;
    options.memory = Memory::Full;
    Ok(ProblemPreset {
        kind: PresetKind::Eigen(family),
        box_domain,
        options,
        description: format!("largest-eigenvalue minimization, n = {n}"),
    })
}

/// Spectral-radius minimization of C̃_n(ω) = A₀/(100n) − ω₁I_u − ω₂I_l posed
/// as largest-eigenvalue minimization of diag(C̃_n, −C̃_n) over
/// [−10, 10]×[−10, 10].
pub fn overton_example(n: usize) -> Result<ProblemPreset> {
    if n % 2 != 0 || n < 4 {
        return Err(Error::Invalid(
            "the spectral-radius example needs even n >= 4".into(),
        ));
    }
    let a0 = overton_base(n);
    let scale = 1.0 / (100.0 * n as f64);
    let two_n = 2 * n;
    // Constant block term diag(A₀, −A₀)/(100n), dense.
    let mut base = CMat::zeros(two_n, two_n);
    for j in 0..n {
        for i in 0..n {
            let v = a0[(i, j)] * scale;
            base[(i, j)] = v;
            base[(n + i, n + j)] = -v;
        }
    }
    // ∓I_u and ∓I_l blocks, sparse diagonal.
    let mut up = Vec::with_capacity(n);
    let mut low = Vec::with_capacity(n);
    for i in 0..n / 2 {
        up.push((i, i, C64::new(-1.0, 0.0)));
        up.push((n + i, n + i, C64::new(1.0, 0.0)));
        let li = n / 2 + i;
        low.push((li, li, C64::new(-1.0, 0.0)));
        low.push((n + li, n + li, C64::new(1.0, 0.0)));
    }
    let family = Arc::new(HermitianFamily::new(
        vec![
            (ScalarField::constant(), MatrixStore::Dense(base)),
            (
                ScalarField::affine(0),
                MatrixStore::Sparse(CsrMatrix::from_triplets(two_n, two_n, &up)),
            ),
            (
                ScalarField::affine(1),
                MatrixStore::Sparse(CsrMatrix::from_triplets(two_n, two_n, &low)),
            ),
        ],
        2,
    )?);
    let box_domain = BoxDomain::new(vec![-10.0, -10.0], vec![10.0, 10.0])?;
    min_largest_eig_problem(family, box_domain).map(|mut p| {
        p.description = format!("spectral-radius minimization, n = {n}");
        p
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grcar_definition() {
        let g = grcar(4).unwrap().to_dense();
        let expect = [
            [1.0, 1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0, 1.0],
            [0.0, -1.0, 1.0, 1.0],
            [0.0, 0.0, -1.0, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[(i, j)] - C64::new(expect[i][j], 0.0)).norm() < 1e-15);
            }
        }
        assert!(grcar(3).is_err());
    }

    #[test]
    fn gear_definition() {
        let g = gear(4).unwrap().to_dense();
        let expect = [
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [-1.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[(i, j)] - C64::new(expect[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn orr_sommerfeld_small() {
        // n = 3: h = 0.5, L = 4·tridiag(1, −2.25, 1), grid x = (−0.5, 0, 0.5)
        // so U = diag(0.75, 1, 0.75); B assembled from the formula.
        let (b, l) = orr_sommerfeld(3).unwrap();
        let ld = l.to_dense();
        assert!((ld[(0, 0)] - C64::new(-9.0, 0.0)).norm() < 1e-13);
        assert!((ld[(0, 1)] - C64::new(4.0, 0.0)).norm() < 1e-13);
        assert!((ld[(1, 0)] - C64::new(4.0, 0.0)).norm() < 1e-13);
        // Hand-computed B: (1/1000)L² − i(UL + 2I).
        let l2 = ld.matmul(&ld);
        let u = CMat::real_diag(&[0.75, 1.0, 0.75]);
        let ul = u.matmul(&ld);
        let mut expect = l2.scale(C64::new(1e-3, 0.0));
        expect.add_scaled(C64::new(0.0, -1.0), &ul);
        for i in 0..3 {
            expect[(i, i)] += C64::new(0.0, -2.0);
        }
        let bd = b.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (bd[(i, j)] - expect[(i, j)]).norm() < 1e-10,
                    "B mismatch at ({i},{j}): {:?} vs {:?}",
                    bd[(i, j)],
                    expect[(i, j)]
                );
            }
        }
        // Structure: L tridiagonal, B pentadiagonal.
        let (bl, bu) = b.bandwidths();
        assert!(bl <= 2 && bu <= 2);
    }

    #[test]
    fn overton_entries() {
        let a = overton_base(4);
        // One-based min{k,j} with +0.1 on the first off-diagonals.
        assert_eq!(a[(0, 0)], C64::new(0.0, 0.0));
        assert!((a[(0, 1)] - C64::new(1.1, 0.0)).norm() < 1e-15);
        assert!((a[(0, 2)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[(2, 3)] - C64::new(3.1, 0.0)).norm() < 1e-15);
        assert!((a[(3, 1)] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(overton_example(5).is_err());
    }

    #[test]
    fn numerical_radius_normal_matrix() {
        // For normal matrices the numerical radius equals the spectral
        // radius: diag(2, −1) has r = 2.
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, C64::new(2.0, 0.0)), (1, 1, C64::new(-1.0, 0.0))],
        );
        let preset = numerical_radius_problem(&a).unwrap();
        let run = preset.run().unwrap();
        assert!(
            (run.final_value - 2.0).abs() < 1e-9,
            "r = {}",
            run.final_value
        );
    }

    #[test]
    fn distance_to_instability_identityish() {
        // A = −I: σ_min(−I − iωI) = √(1+ω²), minimized at ω = 0 with value 1.
        let n = 5;
        let a = CsrMatrix::identity(n).scale(C64::new(-1.0, 0.0));
        let preset = distance_to_instability_problem(
            Arc::new(a),
            None,
            BoxDomain::interval(-1.0, 1.0),
        )
        .unwrap();
        let run = preset.run().unwrap();
        assert!(
            (run.final_value - 1.0).abs() < 1e-9,
            "distance {}",
            run.final_value
        );
        assert!(run.final_point[0].abs() < 1e-6);
    }

    #[test]
    fn mineig_symmetric_crossing() {
        // diag(ω₁, −ω₁) has min largest eigenvalue 0 at ω₁ = 0.
        let family = Arc::new(
            HermitianFamily::new(
                vec![
                    (
                        ScalarField::constant(),
                        MatrixStore::Dense(CMat::zeros(2, 2)),
                    ),
                    (
                        ScalarField::affine(0),
                        MatrixStore::Dense(CMat::real_diag(&[1.0, -1.0])),
                    ),
                ],
                1,
            )
            .unwrap(),
        );
        let preset =
            min_largest_eig_problem(family, BoxDomain::interval(-2.0, 2.0)).unwrap();
        let run = preset.run().unwrap();
        assert!(run.final_value.abs() < 1e-9, "value {}", run.final_value);
    }
}
