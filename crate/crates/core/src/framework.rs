//! The outer greedy subspace loops.
//!
//! One iteration solves the projected problem globally over the box, moves to
//! its optimizer, computes the leading eigenpairs (or singular triplets) of
//! the full problem there, and enlarges the projection subspace with the new
//! vectors. The extended variant also samples eigenvectors at the points
//! ω + h·e_pq with h the last step length, which forces second-derivative
//! agreement of the reduced function at the iterates. Termination follows the
//! optimal-value stagnation test with the √n iteration cap as a backstop.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{C64, CMat};
use crate::linalg::basis::{Basis, DEFAULT_DROP_TOL, expand_basis};
use crate::linalg::eig::dense_herm_eig;
use crate::linalg::lanczos::{LanczosOptions, Which, lanczos_extremal, lanczos_near_shift, singular_triplets};
use crate::linalg::ops::{HermFamilyOp, RectFamilyOp, ShiftedPencilOp};
use crate::linalg::solve::{LuFactor, MatrixShiftProvider, PencilShiftProvider};
use crate::inner_opt::{InnerOptions, InnerOutcome, maximize_box, minimize_box};
use crate::model::{BoxDomain, GeneralFamily, HermitianFamily, ScalarField, SingularTriplets};
use crate::reduced::{ProjectedFamily, RightProjection, TwoSidedProjection};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Assembling densely and calling the direct eigensolver beats the iterative
/// path below this dimension.
const DENSE_EIG_CUTOFF: usize = 250;
/// Same idea for singular values, measured on p + q.
const DENSE_SVD_CUTOFF: usize = 320;
/// Reduced-optimum stagnation threshold that turns the shift heuristic on.
const SHIFT_TRIGGER: f64 = 1e-2;
/// Eigenvalues within this of the J-th (relative to 1 + |λ_J|) belong to its
/// cluster and their eigenvectors are added along with it.
const CLUSTER_TOL: f64 = 1e-10;
/// At most this many extra cluster vectors beyond J.
const CLUSTER_EXTRAS: usize = 3;

// ---------------------------------------------------------------------------
// Options and results
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Basic,
    Extended,
}

/// Which past subspaces are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Memory {
    Full,
    /// Keep the vector groups of the last `w` iterations only (w ∈ {1, 2}).
    Window(usize),
}

#[derive(Clone, Debug)]
pub struct SubspaceOptions {
    pub variant: Variant,
    pub memory: Memory,
    pub sense: Sense,
    pub j: usize,
    /// Outer stagnation tolerance.
    pub tol: f64,
    /// Iteration cap; ⌈√n⌉ when unset.
    pub max_outer: Option<usize>,
    /// Curvature bound handed to the inner optimizer: a lower bound on
    /// second derivatives for minimization, an upper bound for maximization.
    pub curvature: f64,
    /// Inner gap tolerance; 0.1·tol when unset.
    pub inner_tol: Option<f64>,
    /// Relative residual tolerance of the large eigensolves.
    pub eig_tol: f64,
    pub max_inner_evals: usize,
    /// Seeds ω⁽¹⁾ uniformly in the box; the box center is used when absent.
    pub seed: Option<u64>,
    pub initial_point: Option<Vec<f64>>,
}

impl SubspaceOptions {
    pub fn new(sense: Sense, j: usize, curvature: f64) -> Self {
        SubspaceOptions {
            variant: Variant::Basic,
            memory: Memory::Full,
            sense,
            j,
            tol: 1e-12,
            max_outer: None,
            curvature,
            inner_tol: None,
            eig_tol: 1e-12,
            max_inner_evals: 5000,
            seed: None,
            initial_point: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.j == 0 {
            return Err(Error::InvalidOptions("J must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidOptions("tol must be positive".into()));
        }
        match (self.memory, self.variant) {
            (Memory::Window(1), Variant::Extended) => Ok(()),
            (Memory::Window(2), Variant::Basic) => Ok(()),
            (Memory::Window(w), _) => Err(Error::InvalidOptions(format!(
                "window({w}) pairs window(1) with the extended variant and window(2) with the basic one"
            ))),
            (Memory::Full, _) => Ok(()),
        }
    }

    fn inner_tol(&self) -> f64 {
        self.inner_tol.unwrap_or(0.1 * self.tol)
    }

    fn initial(&self, box_domain: &BoxDomain) -> Vec<f64> {
        if let Some(p) = &self.initial_point {
            return box_domain.clip(p);
        }
        match self.seed {
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                box_domain.sample_uniform(&mut rng)
            }
            None => box_domain.center(),
        }
    }

    fn cap(&self, n: usize) -> usize {
        self.max_outer
            .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
    }

    fn lanczos(&self) -> LanczosOptions {
        let mut lo = LanczosOptions::for_pairs(self.j);
        lo.tol = self.eig_tol;
        lo.cluster_extras = CLUSTER_EXTRAS;
        lo.cluster_tol = CLUSTER_TOL;
        lo.seed = self.seed.unwrap_or(0x5eed);
        lo
    }

    /// Lanczos options with the restart window and iteration budget scaled
    /// to the problem size; the benchmark spectra crowd as n grows.
    fn lanczos_sized(&self, n: usize) -> LanczosOptions {
        let mut lo = self.lanczos();
        lo.restart_dim = lo
            .restart_dim
            .max((2.0 * (n as f64).sqrt()) as usize)
            .min(256);
        lo.max_blocks = lo.max_blocks.max(300);
        lo
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIter,
    Error(String),
}

/// One outer iteration of the trace.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Iteration index; k = 1 is the initial point, k ≥ 2 are reduced solves.
    pub k: usize,
    pub omega: Vec<f64>,
    /// Optimal value of the reduced problem that produced ω; None at k = 1.
    pub reduced_opt_value: Option<f64>,
    /// Full objective (λ_J or σ) at ω.
    pub full_value: f64,
    /// Dimension of the subspace the reduced problem was solved on.
    pub subspace_dim: usize,
    /// Step length h = ‖ω⁽ᵏ⁾ − ω⁽ᵏ⁻¹⁾‖₂ (extended variant).
    pub h: Option<f64>,
    pub eig_seconds: f64,
    pub inner_seconds: f64,
    /// Shift handed to the eigensolver, when the heuristic fired.
    pub shift: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_value: f64,
    pub final_point: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub status: RunStatus,
    /// (lower, upper) enclosure for minimization runs: the last reduced
    /// optimum and the full value at the final point.
    pub certificate: Option<(f64, f64)>,
    /// Final subspace dimension.
    pub subspace_dim: usize,
    /// False when the inner lower bounds come from the d ≥ 2 heuristic.
    pub lower_bound_certified: bool,
}

// ---------------------------------------------------------------------------
// Shift policy
// ---------------------------------------------------------------------------

/// Orientation of the spectrum region targeted by the shifted solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftOrientation {
    /// J-th largest eigenvalue problems: shift above the current optimum.
    Eigen,
    /// Largest singular values: mirrored above.
    SingularLargest,
    /// Smallest singular values: shift below.
    SingularSmallest,
}

/// The stagnation-triggered shift: when consecutive reduced optima differ by
/// less than 1e-2, return λ_cur + 5|λ_cur − λ_pre| (σ_cur − 5|…| for the
/// smallest-singular-value orientation); otherwise none.
pub fn shift_policy(prev_opt: f64, cur_opt: f64, orientation: ShiftOrientation) -> Option<f64> {
    let gap = (cur_opt - prev_opt).abs();
    if !gap.is_finite() || gap >= SHIFT_TRIGGER {
        return None;
    }
    Some(match orientation {
        ShiftOrientation::Eigen | ShiftOrientation::SingularLargest => cur_opt + 5.0 * gap,
        ShiftOrientation::SingularSmallest => cur_opt - 5.0 * gap,
    })
}

// ---------------------------------------------------------------------------
// Full-problem solves
// ---------------------------------------------------------------------------

/// Leading eigenpairs of A(ω): values descending, the top J plus up to
/// CLUSTER_EXTRAS vectors within the cluster tolerance of λ_J.
pub(crate) fn full_eig_pairs(
    family: &HermitianFamily,
    omega: &[f64],
    j: usize,
    shift: Option<f64>,
    opts: &SubspaceOptions,
) -> Result<(Vec<f64>, CMat)> {
    let n = family.n();
    if n <= DENSE_EIG_CUTOFF {
        let pairs = dense_herm_eig(&family.assemble_dense(omega))?;
        return Ok(cluster_slice(&pairs.values, &pairs.vectors, j));
    }
    let lopts = opts.lanczos_sized(n);
    let pairs = match shift {
        Some(s) => {
            let assembled = family.assemble_sparse(omega);
            let mut provider = MatrixShiftProvider::new(assembled);
            let mut op = HermFamilyOp(family.action(omega));
            match lanczos_near_shift(&mut op, Some(&mut provider), s, j, &lopts) {
                Ok(p) => p,
                // The shift is a heuristic; fall back to the plain extremal
                // solve rather than giving up.
                Err(_) => {
                    let mut op = HermFamilyOp(family.action(omega));
                    lanczos_extremal(&mut op, j, Which::Largest, &lopts)?
                }
            }
        }
        None => {
            let mut op = HermFamilyOp(family.action(omega));
            lanczos_extremal(&mut op, j, Which::Largest, &lopts)?
        }
    };
    // Normalize to descending order with the cluster rule applied.
    let mut order: Vec<usize> = (0..pairs.values.len()).collect();
    order.sort_by(|&a, &b| pairs.values[b].partial_cmp(&pairs.values[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| pairs.values[i]).collect();
    let mut vectors = CMat::zeros(pairs.vectors.nrows(), 0);
    for &i in &order {
        vectors.push_col(pairs.vectors.col(i));
    }
    Ok(cluster_slice(&values, &vectors, j))
}

/// Take the top J pairs plus cluster members within tolerance of the J-th.
fn cluster_slice(values: &[f64], vectors: &CMat, j: usize) -> (Vec<f64>, CMat) {
    let j = j.min(values.len());
    let lam_j = values[j - 1];
    let ctol = CLUSTER_TOL * (1.0 + lam_j.abs());
    let mut take = j;
    while take < values.len() && take < j + CLUSTER_EXTRAS && (values[take] - lam_j).abs() <= ctol
    {
        take += 1;
    }
    let mut vals = Vec::with_capacity(take);
    let mut vecs = CMat::zeros(vectors.nrows(), 0);
    for i in 0..take {
        vals.push(values[i]);
        vecs.push_col(vectors.col(i));
    }
    (vals, vecs)
}

fn columns_of(mat: &CMat) -> Vec<Vec<C64>> {
    (0..mat.ncols()).map(|c| mat.col(c).to_vec()).collect()
}

// ---------------------------------------------------------------------------
// Eigenvalue optimization
// ---------------------------------------------------------------------------

/// Optimize the J-th largest eigenvalue of A(ω) over the box by the greedy
/// subspace procedure (basic or extended, with or without past).
pub fn optimize_eig(
    family: Arc<HermitianFamily>,
    box_domain: &BoxDomain,
    opts: &SubspaceOptions,
) -> Result<RunResult> {
    opts.validate()?;
    let n = family.n();
    let d = family.d();
    if box_domain.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "box dimension {} does not match family parameter count {d}",
            box_domain.dim()
        )));
    }
    if n <= opts.j {
        return Err(Error::InvalidOptions(format!(
            "need n > J, got n={n}, J={}",
            opts.j
        )));
    }
    let cap = opts.cap(n);
    let inner_tol = opts.inner_tol();

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;

    // k = 1: eigenvectors at the initial point.
    let omega1 = opts.initial(box_domain);
    let t0 = Instant::now();
    let (vals1, vecs1) = match full_eig_pairs(&family, &omega1, opts.j, None, opts) {
        Ok(out) => out,
        Err(e) => return Ok(error_result(records, e)),
    };
    let eig_seconds = t0.elapsed().as_secs_f64();
    records.push(IterationRecord {
        k: 1,
        omega: omega1.clone(),
        reduced_opt_value: None,
        full_value: vals1[opts.j - 1],
        subspace_dim: 0,
        h: None,
        eig_seconds,
        inner_seconds: 0.0,
        shift: None,
    });

    // Memory bookkeeping: per-iteration raw vector groups for the window
    // variants, an incrementally extended projection for full memory.
    let mut groups: Vec<Vec<Vec<C64>>> = vec![columns_of(&vecs1)];
    let mut basis = match Basis::from_candidates(n, &groups[0], DEFAULT_DROP_TOL) {
        Ok(b) => b,
        Err(e) => return Ok(error_result(records, e)),
    };
    let mut projection = match ProjectedFamily::project(Arc::clone(&family), basis.clone()) {
        Ok(p) => p,
        Err(e) => return Ok(error_result(records, e)),
    };

    let mut prev_omega = omega1;
    let mut prev_reduced: Option<f64> = None;
    let seed0 = opts.seed.unwrap_or(0);

    for k in 2.. {
        if k - 1 > cap {
            status = RunStatus::MaxIter;
            break;
        }
        if projection.dim() < opts.j {
            return Ok(error_result(
                records,
                Error::InvalidOptions(format!(
                    "subspace dimension {} fell below J={}",
                    projection.dim(),
                    opts.j
                )),
            ));
        }
        // Solve the reduced problem globally.
        let t_inner = Instant::now();
        let inner = match solve_reduced_eig(&projection, box_domain, opts, inner_tol, seed0, k, &prev_omega)
        {
            Ok(out) => out,
            Err(e) => return Ok(error_result(records, e)),
        };
        let inner_seconds = t_inner.elapsed().as_secs_f64();
        let omega_new = inner.point.clone();
        let reduced_opt = inner.value;
        let m_used = projection.dim();

        let converged = prev_reduced
            .map(|p| (reduced_opt - p).abs() <= opts.tol)
            .unwrap_or(false);
        let shift = if converged {
            None
        } else {
            prev_reduced.and_then(|p| shift_policy(p, reduced_opt, ShiftOrientation::Eigen))
        };

        // Full eigenpairs at the new iterate.
        let t_eig = Instant::now();
        let (vals, vecs) = match full_eig_pairs(&family, &omega_new, opts.j, shift, opts) {
            Ok(out) => out,
            Err(e) => return Ok(error_result(records, e)),
        };

        let h = norm2_diff(&omega_new, &prev_omega);
        records.push(IterationRecord {
            k,
            omega: omega_new.clone(),
            reduced_opt_value: Some(reduced_opt),
            full_value: vals[opts.j - 1],
            subspace_dim: m_used,
            h: if opts.variant == Variant::Extended {
                Some(h)
            } else {
                None
            },
            eig_seconds: 0.0, // patched below
            inner_seconds,
            shift,
        });

        if converged {
            let last = records.last_mut().unwrap();
            last.eig_seconds = t_eig.elapsed().as_secs_f64();
            status = RunStatus::Converged;
            break;
        }

        // Collect this iteration's vector group.
        let mut group = columns_of(&vecs);
        if opts.variant == Variant::Extended && h > 0.0 {
            for pq in direction_pairs(d) {
                let sample: Vec<f64> = omega_new
                    .iter()
                    .zip(&pq)
                    .map(|(w, e)| w + h * e)
                    .collect();
                let sample = box_domain.clip(&sample);
                if norm2_diff(&sample, &omega_new) == 0.0 {
                    continue;
                }
                let (_, svecs) = match full_eig_pairs(&family, &sample, opts.j, shift, opts) {
                    Ok(out) => out,
                    Err(e) => return Ok(error_result(records, e)),
                };
                group.extend(columns_of(&svecs));
            }
        }
        records.last_mut().unwrap().eig_seconds = t_eig.elapsed().as_secs_f64();

        // Update the projection under the memory policy.
        match opts.memory {
            Memory::Full => {
                let new_basis = match expand_basis(&basis, &group, DEFAULT_DROP_TOL) {
                    Ok(b) => b,
                    Err(e) => return Ok(error_result(records, e)),
                };
                if new_basis.dim() > basis.dim() {
                    projection = match projection.extend(new_basis.clone()) {
                        Ok(p) => p,
                        Err(e) => return Ok(error_result(records, e)),
                    };
                    basis = new_basis;
                }
            }
            Memory::Window(w) => {
                groups.push(group);
                let start = groups.len().saturating_sub(w);
                let cands: Vec<Vec<C64>> =
                    groups[start..].iter().flatten().cloned().collect();
                basis = match Basis::from_candidates(n, &cands, DEFAULT_DROP_TOL) {
                    Ok(b) => b,
                    Err(e) => return Ok(error_result(records, e)),
                };
                if basis.dim() == 0 {
                    return Ok(error_result(records, Error::EmptySubspace));
                }
                projection =
                    match ProjectedFamily::project(Arc::clone(&family), basis.clone()) {
                        Ok(p) => p,
                        Err(e) => return Ok(error_result(records, e)),
                    };
            }
        }

        prev_omega = omega_new;
        prev_reduced = Some(reduced_opt);
    }

    Ok(finish_run(
        records,
        status,
        opts.sense,
        basis.dim(),
        d == 1,
    ))
}

fn solve_reduced_eig(
    projection: &ProjectedFamily,
    box_domain: &BoxDomain,
    opts: &SubspaceOptions,
    inner_tol: f64,
    seed0: u64,
    k: usize,
    start: &[f64],
) -> Result<InnerOutcome> {
    let j = opts.j.min(projection.dim());
    let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let vg = projection.value_grad(w, j)?;
        Ok((vg.value, vg.gradient))
    };
    let iopts = InnerOptions {
        curvature: opts.curvature,
        tol: inner_tol,
        max_evals: opts.max_inner_evals,
        seed: seed0 ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        start: Some(start.to_vec()),
    };
    match opts.sense {
        Sense::Minimize => minimize_box(objective, box_domain, &iopts),
        Sense::Maximize => maximize_box(objective, box_domain, &iopts),
    }
}

/// e_pp = e_p and e_pq = (e_p + e_q)/√2 for p < q.
fn direction_pairs(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(d * (d + 1) / 2);
    for p in 0..d {
        for q in p..d {
            let mut e = vec![0.0; d];
            if p == q {
                e[p] = 1.0;
            } else {
                let s = 1.0 / 2.0f64.sqrt();
                e[p] = s;
                e[q] = s;
            }
            dirs.push(e);
        }
    }
    dirs
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn error_result(records: Vec<IterationRecord>, e: Error) -> RunResult {
    let (final_value, final_point, dim) = records
        .last()
        .map(|r| (r.full_value, r.omega.clone(), r.subspace_dim))
        .unwrap_or((f64::NAN, Vec::new(), 0));
    RunResult {
        final_value,
        final_point,
        iterations: records,
        status: RunStatus::Error(e.to_string()),
        certificate: None,
        subspace_dim: dim,
        lower_bound_certified: false,
    }
}

fn finish_run(
    records: Vec<IterationRecord>,
    status: RunStatus,
    sense: Sense,
    subspace_dim: usize,
    certified: bool,
) -> RunResult {
    // The achieved objective is the best full value over the iterates.
    let best = records
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| match sense {
            Sense::Minimize => a.full_value.partial_cmp(&b.full_value).unwrap(),
            Sense::Maximize => b.full_value.partial_cmp(&a.full_value).unwrap(),
        })
        .map(|(i, _)| i);
    let (final_value, final_point) = match best {
        Some(i) => (records[i].full_value, records[i].omega.clone()),
        None => (f64::NAN, Vec::new()),
    };
    let certificate = match sense {
        Sense::Minimize => records
            .last()
            .and_then(|r| r.reduced_opt_value)
            .map(|lower| (lower, final_value)),
        Sense::Maximize => None,
    };
    RunResult {
        final_value,
        final_point,
        iterations: records,
        status,
        certificate,
        subspace_dim,
        lower_bound_certified: certified,
    }
}

// ---------------------------------------------------------------------------
// Singular value optimization (largest)
// ---------------------------------------------------------------------------

/// Full triplets of an explicit family at ω: the largest J with cluster
/// extras, descending.
fn full_sv_largest(
    family: &GeneralFamily,
    omega: &[f64],
    j: usize,
    opts: &SubspaceOptions,
) -> Result<SingularTriplets> {
    if family.p() + family.q() <= DENSE_SVD_CUTOFF {
        let (sigma, u, v) = crate::linalg::eig::small_svd(&family.assemble_dense(omega))?;
        let (vals, takeu) = cluster_slice(&sigma, &u, j);
        let (_, takev) = cluster_slice(&sigma, &v, j);
        let k = vals.len();
        return Ok(SingularTriplets {
            residuals: vec![0.0; k],
            inconsistent: vec![false; k],
            values: vals,
            left: takeu,
            right: takev,
        });
    }
    let lopts = opts.lanczos_sized(family.p().max(family.q()));
    let mut op = RectFamilyOp(family.action(omega));
    singular_triplets(&mut op, j, Which::Largest, &lopts, None, C64::new(0.0, 0.0))
}

/// Optimize the J-th largest singular value of B(ω) with two-sided
/// projections grown from consistent left/right singular vectors.
pub fn optimize_sv_largest(
    family: Arc<GeneralFamily>,
    box_domain: &BoxDomain,
    opts: &SubspaceOptions,
) -> Result<RunResult> {
    opts.validate()?;
    let d = family.d();
    let n_scale = family.p().max(family.q());
    if box_domain.dim() != d {
        return Err(Error::DimensionMismatch(
            "box dimension does not match the family".into(),
        ));
    }
    let cap = opts.cap(n_scale);
    let inner_tol = opts.inner_tol();

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;

    let omega1 = opts.initial(box_domain);
    let t0 = Instant::now();
    let trip1 = match full_sv_largest(&family, &omega1, opts.j, opts) {
        Ok(t) => t,
        Err(e) => return Ok(error_result(records, e)),
    };
    records.push(IterationRecord {
        k: 1,
        omega: omega1.clone(),
        reduced_opt_value: None,
        full_value: trip1.values[opts.j - 1],
        subspace_dim: 0,
        h: None,
        eig_seconds: t0.elapsed().as_secs_f64(),
        inner_seconds: 0.0,
        shift: None,
    });

    let mut left_groups: Vec<Vec<Vec<C64>>> = vec![columns_of(&trip1.left)];
    let mut right_groups: Vec<Vec<Vec<C64>>> = vec![columns_of(&trip1.right)];
    let rebuild = |lg: &[Vec<Vec<C64>>], rg: &[Vec<Vec<C64>>], w: Option<usize>| -> Result<(Basis, Basis)> {
        let startl = w.map(|w| lg.len().saturating_sub(w)).unwrap_or(0);
        let lc: Vec<Vec<C64>> = lg[startl..].iter().flatten().cloned().collect();
        let rc: Vec<Vec<C64>> = rg[startl..].iter().flatten().cloned().collect();
        let lb = Basis::from_candidates(family.p(), &lc, DEFAULT_DROP_TOL)?;
        let rb = Basis::from_candidates(family.q(), &rc, DEFAULT_DROP_TOL)?;
        Ok((lb, rb))
    };
    let window = match opts.memory {
        Memory::Full => None,
        Memory::Window(w) => Some(w),
    };
    let (mut left_basis, mut right_basis) = match rebuild(&left_groups, &right_groups, window) {
        Ok(b) => b,
        Err(e) => return Ok(error_result(records, e)),
    };
    let mut projection = match TwoSidedProjection::project(
        Arc::clone(&family),
        left_basis.clone(),
        right_basis.clone(),
    ) {
        Ok(p) => p,
        Err(e) => return Ok(error_result(records, e)),
    };

    let mut prev_omega = omega1;
    let mut prev_reduced: Option<f64> = None;
    let seed0 = opts.seed.unwrap_or(0);

    for k in 2.. {
        if k - 1 > cap {
            status = RunStatus::MaxIter;
            break;
        }
        let j_eff = opts.j.min(left_basis.dim().min(right_basis.dim()));
        let t_inner = Instant::now();
        let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
            let vg = projection.value_grad(w, j_eff)?;
            Ok((vg.value, vg.gradient))
        };
        let iopts = InnerOptions {
            curvature: opts.curvature,
            tol: inner_tol,
            max_evals: opts.max_inner_evals,
            seed: seed0 ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            start: Some(prev_omega.clone()),
        };
        let inner = match opts.sense {
            Sense::Maximize => maximize_box(objective, box_domain, &iopts),
            Sense::Minimize => minimize_box(objective, box_domain, &iopts),
        };
        let inner = match inner {
            Ok(out) => out,
            Err(e) => return Ok(error_result(records, e)),
        };
        let inner_seconds = t_inner.elapsed().as_secs_f64();
        let omega_new = inner.point.clone();
        let reduced_opt = inner.value;
        let m_used = left_basis.dim().min(right_basis.dim());

        let converged = prev_reduced
            .map(|p| (reduced_opt - p).abs() <= opts.tol)
            .unwrap_or(false);
        let shift = if converged {
            None
        } else {
            prev_reduced
                .and_then(|p| shift_policy(p, reduced_opt, ShiftOrientation::SingularLargest))
        };

        let t_eig = Instant::now();
        let trip = match full_sv_largest(&family, &omega_new, opts.j, opts) {
            Ok(t) => t,
            Err(e) => return Ok(error_result(records, e)),
        };
        let h = norm2_diff(&omega_new, &prev_omega);
        records.push(IterationRecord {
            k,
            omega: omega_new.clone(),
            reduced_opt_value: Some(reduced_opt),
            full_value: trip.values[opts.j - 1],
            subspace_dim: m_used,
            h: if opts.variant == Variant::Extended {
                Some(h)
            } else {
                None
            },
            eig_seconds: 0.0,
            inner_seconds,
            shift,
        });

        if converged {
            records.last_mut().unwrap().eig_seconds = t_eig.elapsed().as_secs_f64();
            status = RunStatus::Converged;
            break;
        }

        let mut lgroup = columns_of(&trip.left);
        let mut rgroup = columns_of(&trip.right);
        if opts.variant == Variant::Extended && h > 0.0 {
            for pq in direction_pairs(d) {
                let sample: Vec<f64> = omega_new
                    .iter()
                    .zip(&pq)
                    .map(|(w, e)| w + h * e)
                    .collect();
                let sample = box_domain.clip(&sample);
                if norm2_diff(&sample, &omega_new) == 0.0 {
                    continue;
                }
                let strip = match full_sv_largest(&family, &sample, opts.j, opts) {
                    Ok(t) => t,
                    Err(e) => return Ok(error_result(records, e)),
                };
                lgroup.extend(columns_of(&strip.left));
                rgroup.extend(columns_of(&strip.right));
            }
        }
        records.last_mut().unwrap().eig_seconds = t_eig.elapsed().as_secs_f64();

        left_groups.push(lgroup);
        right_groups.push(rgroup);
        let built = match rebuild(&left_groups, &right_groups, window) {
            Ok(b) => b,
            Err(e) => return Ok(error_result(records, e)),
        };
        left_basis = built.0;
        right_basis = built.1;
        if left_basis.dim() == 0 || right_basis.dim() == 0 {
            return Ok(error_result(records, Error::EmptySubspace));
        }
        projection = match TwoSidedProjection::project(
            Arc::clone(&family),
            left_basis.clone(),
            right_basis.clone(),
        ) {
            Ok(p) => p,
            Err(e) => return Ok(error_result(records, e)),
        };

        prev_omega = omega_new;
        prev_reduced = Some(reduced_opt);
    }

    Ok(finish_run(
        records,
        status,
        opts.sense,
        left_basis.dim().min(right_basis.dim()),
        d == 1,
    ))
}

// ---------------------------------------------------------------------------
// Singular value optimization (smallest)
// ---------------------------------------------------------------------------

/// The smallest-singular-value problems accept either an explicit family or
/// an implicitly inverted pencil B(ω) = L⁻¹B − iω·I (the distance-to-
/// instability form), whose solves factor (B − iωL) instead of forming L⁻¹B.
pub enum SvSmallestSource {
    Family(Arc<GeneralFamily>),
    Pencil {
        b: Arc<CsrMatrix>,
        l: Arc<CsrMatrix>,
    },
}

impl SvSmallestSource {
    fn d(&self) -> usize {
        match self {
            SvSmallestSource::Family(f) => f.d(),
            SvSmallestSource::Pencil { .. } => 1,
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            SvSmallestSource::Family(f) => (f.p(), f.q()),
            SvSmallestSource::Pencil { b, .. } => (b.nrows(), b.nrows()),
        }
    }

    fn fields(&self) -> Vec<ScalarField> {
        match self {
            SvSmallestSource::Family(f) => {
                f.terms().iter().map(|(field, _)| field.clone()).collect()
            }
            // B(ω) = 1·(L⁻¹B) + ω·(−iI).
            SvSmallestSource::Pencil { .. } => {
                vec![ScalarField::constant(), ScalarField::affine(0)]
            }
        }
    }

    /// Tall images B_ℓ·V of the right basis, one per term.
    fn term_images(&self, basis: &Basis) -> Result<Vec<CMat>> {
        match self {
            SvSmallestSource::Family(f) => Ok(f
                .terms()
                .iter()
                .map(|(_, mat)| {
                    let mut image = CMat::zeros(f.p(), basis.dim());
                    let mut tmp = vec![C64::new(0.0, 0.0); f.p()];
                    for c in 0..basis.dim() {
                        mat.matvec(basis.col(c), &mut tmp);
                        image.set_col(c, &tmp);
                    }
                    image
                })
                .collect()),
            SvSmallestSource::Pencil { b, l } => {
                let n = b.nrows();
                // A·V via banded solves with L, then the −i·V block.
                let lf = LuFactor::factor_csr(l)?;
                let mut t_a = CMat::zeros(n, basis.dim());
                let mut tmp = vec![C64::new(0.0, 0.0); n];
                for c in 0..basis.dim() {
                    b.matvec(basis.col(c), &mut tmp);
                    let sol = lf.solve(&tmp);
                    t_a.set_col(c, &sol);
                }
                let minus_i = C64::new(0.0, -1.0);
                let mut t_i = CMat::zeros(n, basis.dim());
                for c in 0..basis.dim() {
                    let col: Vec<C64> = basis.col(c).iter().map(|z| z * minus_i).collect();
                    t_i.set_col(c, &col);
                }
                Ok(vec![t_a, t_i])
            }
        }
    }

    /// Full smallest-J triplets at ω.
    fn full_smallest(
        &self,
        omega: &[f64],
        j: usize,
        opts: &SubspaceOptions,
    ) -> Result<SingularTriplets> {
        let (p_dim, q_dim) = self.dims();
        let lopts = opts.lanczos_sized(p_dim.max(q_dim));
        match self {
            SvSmallestSource::Family(f) => {
                if f.p() + f.q() <= DENSE_SVD_CUTOFF {
                    let (sigma, u, v) = crate::linalg::eig::small_svd(&f.assemble_dense(omega))?;
                    // Smallest j, reported σ-descending among themselves.
                    let k = sigma.len();
                    let take = j.min(k);
                    let mut vals = Vec::with_capacity(take);
                    let mut left = CMat::zeros(f.p(), 0);
                    let mut right = CMat::zeros(f.q(), 0);
                    for i in (k - take)..k {
                        vals.push(sigma[i]);
                        left.push_col(u.col(i));
                        right.push_col(v.col(i));
                    }
                    return Ok(SingularTriplets {
                        residuals: vec![0.0; take],
                        inconsistent: vec![false; take],
                        values: vals,
                        left,
                        right,
                    });
                }
                // Square families get a factorized inverse-Gram solve; wide
                // or tall ones fall back to the Gram operator's low end.
                if f.p() == f.q() {
                    let assembled = sparse_from_family(f, omega);
                    let mut provider = MatrixShiftProvider::new(assembled);
                    let mut op = RectFamilyOp(f.action(omega));
                    singular_triplets(
                        &mut op,
                        j,
                        Which::Smallest,
                        &lopts,
                        Some(&mut provider),
                        C64::new(0.0, 0.0),
                    )
                } else {
                    let mut op = RectFamilyOp(f.action(omega));
                    singular_triplets(&mut op, j, Which::Smallest, &lopts, None, C64::new(0.0, 0.0))
                }
            }
            SvSmallestSource::Pencil { b, l } => {
                let shift = C64::new(0.0, omega[0]);
                let mut provider = PencilShiftProvider::new((**b).clone(), (**l).clone());
                let mut op = ShiftedPencilOp::new(b, l, shift)?;
                singular_triplets(&mut op, j, Which::Smallest, &lopts, Some(&mut provider), shift)
            }
        }
    }
}

fn sparse_from_family(f: &GeneralFamily, omega: &[f64]) -> CsrMatrix {
    let coeffs = f.coefficients(omega);
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    for ((_, mat), &c) in f.terms().iter().zip(&coeffs) {
        if c == 0.0 {
            continue;
        }
        let cc = C64::new(c, 0.0);
        match mat {
            crate::model::MatrixStore::Sparse(s) => {
                trip.extend(s.iter_entries().map(|(i, jj, v)| (i, jj, cc * v)))
            }
            crate::model::MatrixStore::Dense(dm) => {
                for jj in 0..dm.ncols() {
                    for i in 0..dm.nrows() {
                        let v = dm[(i, jj)];
                        if v != C64::new(0.0, 0.0) {
                            trip.push((i, jj, cc * v));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(f.p(), f.q(), &trip)
}

/// Optimize the J-th smallest singular value over the box. Only the right
/// subspace is restricted, so the reduced problem is the J-th smallest
/// singular value of B(ω)V and monotonicity is preserved.
pub fn optimize_sv_smallest(
    source: SvSmallestSource,
    box_domain: &BoxDomain,
    opts: &SubspaceOptions,
) -> Result<RunResult> {
    opts.validate()?;
    let d = source.d();
    let (p, q) = source.dims();
    if box_domain.dim() != d {
        return Err(Error::DimensionMismatch(
            "box dimension does not match the problem".into(),
        ));
    }
    let cap = opts.cap(p.max(q));
    let inner_tol = opts.inner_tol();
    let fields = source.fields();

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;

    let omega1 = opts.initial(box_domain);
    let t0 = Instant::now();
    let trip1 = match source.full_smallest(&omega1, opts.j, opts) {
        Ok(t) => t,
        Err(e) => return Ok(error_result(records, e)),
    };
    records.push(IterationRecord {
        k: 1,
        omega: omega1.clone(),
        reduced_opt_value: None,
        full_value: trip1.values[0],
        subspace_dim: 0,
        h: None,
        eig_seconds: t0.elapsed().as_secs_f64(),
        inner_seconds: 0.0,
        shift: None,
    });

    let mut groups: Vec<Vec<Vec<C64>>> = vec![columns_of(&trip1.right)];
    let window = match opts.memory {
        Memory::Full => None,
        Memory::Window(w) => Some(w),
    };
    let rebuild = |groups: &[Vec<Vec<C64>>]| -> Result<Basis> {
        let start = window.map(|w| groups.len().saturating_sub(w)).unwrap_or(0);
        let cands: Vec<Vec<C64>> = groups[start..].iter().flatten().cloned().collect();
        Basis::from_candidates(q, &cands, DEFAULT_DROP_TOL)
    };
    let mut basis = match rebuild(&groups) {
        Ok(b) => b,
        Err(e) => return Ok(error_result(records, e)),
    };
    let project = |basis: &Basis| -> Result<RightProjection> {
        let images = source.term_images(basis)?;
        RightProjection::from_parts(fields.clone(), d, images, basis.clone())
    };
    let mut projection = match project(&basis) {
        Ok(p) => p,
        Err(e) => return Ok(error_result(records, e)),
    };

    let mut prev_omega = omega1;
    let mut prev_reduced: Option<f64> = None;
    let seed0 = opts.seed.unwrap_or(0);

    for k in 2.. {
        if k - 1 > cap {
            status = RunStatus::MaxIter;
            break;
        }
        let j_eff = opts.j.min(basis.dim());
        let t_inner = Instant::now();
        let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
            let vg = projection.value_grad(w, j_eff)?;
            Ok((vg.value, vg.gradient))
        };
        let iopts = InnerOptions {
            curvature: opts.curvature,
            tol: inner_tol,
            max_evals: opts.max_inner_evals,
            seed: seed0 ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            start: Some(prev_omega.clone()),
        };
        let inner = match opts.sense {
            Sense::Minimize => minimize_box(objective, box_domain, &iopts),
            Sense::Maximize => maximize_box(objective, box_domain, &iopts),
        };
        let inner = match inner {
            Ok(out) => out,
            Err(e) => return Ok(error_result(records, e)),
        };
        let inner_seconds = t_inner.elapsed().as_secs_f64();
        let omega_new = inner.point.clone();
        let reduced_opt = inner.value;
        let m_used = basis.dim();

        let converged = prev_reduced
            .map(|pv| (reduced_opt - pv).abs() <= opts.tol)
            .unwrap_or(false);
        let shift = if converged {
            None
        } else {
            prev_reduced
                .and_then(|pv| shift_policy(pv, reduced_opt, ShiftOrientation::SingularSmallest))
        };

        let t_eig = Instant::now();
        let trip = match source.full_smallest(&omega_new, opts.j, opts) {
            Ok(t) => t,
            Err(e) => return Ok(error_result(records, e)),
        };
        let h = norm2_diff(&omega_new, &prev_omega);
        records.push(IterationRecord {
            k,
            omega: omega_new.clone(),
            reduced_opt_value: Some(reduced_opt),
            full_value: trip.values[0],
            subspace_dim: m_used,
            h: if opts.variant == Variant::Extended {
                Some(h)
            } else {
                None
            },
            eig_seconds: 0.0,
            inner_seconds,
            shift,
        });

        if converged {
            records.last_mut().unwrap().eig_seconds = t_eig.elapsed().as_secs_f64();
            status = RunStatus::Converged;
            break;
        }

        let mut group = columns_of(&trip.right);
        if opts.variant == Variant::Extended && h > 0.0 {
            for pq in direction_pairs(d) {
                let sample: Vec<f64> = omega_new
                    .iter()
                    .zip(&pq)
                    .map(|(w, e)| w + h * e)
                    .collect();
                let sample = box_domain.clip(&sample);
                if norm2_diff(&sample, &omega_new) == 0.0 {
                    continue;
                }
                let strip = match source.full_smallest(&sample, opts.j, opts) {
                    Ok(t) => t,
                    Err(e) => return Ok(error_result(records, e)),
                };
                group.extend(columns_of(&strip.right));
            }
        }
        records.last_mut().unwrap().eig_seconds = t_eig.elapsed().as_secs_f64();

        groups.push(group);
        basis = match rebuild(&groups) {
            Ok(b) => b,
            Err(e) => return Ok(error_result(records, e)),
        };
        if basis.dim() == 0 {
            return Ok(error_result(records, Error::EmptySubspace));
        }
        projection = match project(&basis) {
            Ok(p) => p,
            Err(e) => return Ok(error_result(records, e)),
        };

        prev_omega = omega_new;
        prev_reduced = Some(reduced_opt);
    }

    Ok(finish_run(records, status, opts.sense, basis.dim(), d == 1))
}

// ---------------------------------------------------------------------------
// Cutting-plane baseline
// ---------------------------------------------------------------------------

/// Kelley's cutting-plane method for minimizing the largest eigenvalue of an
/// affine Hermitian family: the envelope of Rayleigh-quotient cuts
/// v̂*A(ω)v̂ is minimized instead of a projected eigenvalue function. Provided
/// as the γ = 0 baseline the subspace procedure dominates.
pub fn cutting_plane_min(
    family: Arc<HermitianFamily>,
    box_domain: &BoxDomain,
    tol: f64,
    opts: &SubspaceOptions,
) -> Result<RunResult> {
    if !family.is_affine() {
        return Err(Error::InvalidOptions(
            "the cutting-plane baseline needs an affine family".into(),
        ));
    }
    let n = family.n();
    let d = family.d();
    let cap = opts.cap(n);
    let mut state =
        crate::inner_opt::EnvelopeState::new(box_domain.clone(), 0.0, opts.seed.unwrap_or(0));

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut omega = opts.initial(box_domain);
    let mut prev_env: Option<f64> = None;

    for k in 1.. {
        if k > cap {
            status = RunStatus::MaxIter;
            break;
        }
        let t_eig = Instant::now();
        let (vals, vecs) = match full_eig_pairs(&family, &omega, 1, None, opts) {
            Ok(out) => out,
            Err(e) => return Ok(error_result(records, e)),
        };
        let eig_seconds = t_eig.elapsed().as_secs_f64();
        let v = vecs.col(0);
        // The cut c(ω) = v*A(ω)v is affine: value at the anchor plus the
        // exact gradient from the derivative coefficients.
        let mut gradient = Vec::with_capacity(d);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        for qax in 0..d {
            let act = family.derivative_action(&omega, qax)?;
            act.apply(v, &mut tmp);
            let mut s = C64::new(0.0, 0.0);
            for i in 0..n {
                s += v[i].conj() * tmp[i];
            }
            gradient.push(s.re);
        }
        let t_inner = Instant::now();
        state.add_support(omega.clone(), vals[0], gradient);
        let (next, env_min) = state.envelope_minimum();
        let inner_seconds = t_inner.elapsed().as_secs_f64();

        records.push(IterationRecord {
            k,
            omega: omega.clone(),
            reduced_opt_value: Some(env_min),
            full_value: vals[0],
            subspace_dim: state.supports.len(),
            h: None,
            eig_seconds,
            inner_seconds,
            shift: None,
        });

        if let Some(prev) = prev_env {
            if (env_min - prev).abs() <= tol {
                status = RunStatus::Converged;
                break;
            }
        }
        prev_env = Some(env_min);
        omega = next;
    }

    let mut result = finish_run(
        records,
        status,
        Sense::Minimize,
        state.supports.len(),
        d == 1,
    );
    // The cutting-plane certificate pairs the envelope minimum with the best
    // sampled eigenvalue.
    result.certificate = result
        .iterations
        .last()
        .and_then(|r| r.reduced_opt_value)
        .map(|lower| (lower, result.final_value));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MatrixStore;

    fn crossing_family() -> Arc<HermitianFamily> {
        // diag(ω, 1−ω) = diag(0, 1) + ω·diag(1, −1): λ_1 has its minimum
        // 0.5 at ω = 0.5.
        let base = CMat::real_diag(&[0.0, 1.0]);
        let slope = CMat::real_diag(&[1.0, -1.0]);
        Arc::new(
            HermitianFamily::new(
                vec![
                    (ScalarField::constant(), MatrixStore::Dense(base)),
                    (ScalarField::affine(0), MatrixStore::Dense(slope)),
                ],
                1,
            )
            .unwrap(),
        )
    }

    #[test]
    fn two_by_two_crossing() {
        let fam = crossing_family();
        let b = BoxDomain::interval(0.0, 1.0);
        let mut opts = SubspaceOptions::new(Sense::Minimize, 1, -1e-6);
        opts.tol = 1e-12;
        opts.max_outer = Some(10);
        let run = optimize_eig(fam, &b, &opts).unwrap();
        assert_eq!(run.status, RunStatus::Converged, "{:?}", run.status);
        assert!((run.final_value - 0.5).abs() < 1e-9, "value {}", run.final_value);
        assert!((run.final_point[0] - 0.5).abs() < 1e-6);
        assert!(run.iterations.len() <= 4, "{} iterations", run.iterations.len());
        let cert = run.certificate.unwrap();
        assert!(cert.0 <= cert.1 + 1e-12);
    }

    #[test]
    fn shift_policy_formulas() {
        let s = shift_policy(1.00, 1.001, ShiftOrientation::Eigen).unwrap();
        assert!((s - 1.006).abs() < 1e-12, "shift {s}");
        assert_eq!(shift_policy(0.5, 0.9, ShiftOrientation::Eigen), None);
        assert_eq!(shift_policy(0.7, 0.7, ShiftOrientation::Eigen), Some(0.7));
        let s = shift_policy(0.010, 0.008, ShiftOrientation::SingularSmallest).unwrap();
        assert!((s + 0.002).abs() < 1e-12, "shift {s}");
    }

    #[test]
    fn window_pairing_validated() {
        let mut opts = SubspaceOptions::new(Sense::Maximize, 1, 1.0);
        opts.memory = Memory::Window(1);
        opts.variant = Variant::Basic;
        assert!(opts.validate().is_err());
        opts.variant = Variant::Extended;
        assert!(opts.validate().is_ok());
        opts.memory = Memory::Window(2);
        assert!(opts.validate().is_err());
        opts.variant = Variant::Basic;
        assert!(opts.validate().is_ok());
    }

    #[test]
    fn constant_sv_family_immediate() {
        let fam = Arc::new(
            GeneralFamily::new(
                vec![(ScalarField::constant(), MatrixStore::Dense(CMat::eye(6)))],
                1,
            )
            .unwrap(),
        );
        let b = BoxDomain::interval(-1.0, 1.0);
        let mut opts = SubspaceOptions::new(Sense::Maximize, 1, 1.0);
        opts.tol = 1e-12;
        let run = optimize_sv_largest(fam, &b, &opts).unwrap();
        assert_eq!(run.status, RunStatus::Converged);
        assert!((run.final_value - 1.0).abs() < 1e-12);
        assert!(run.iterations.len() <= 3);
    }

    #[test]
    fn constant_smallest_immediate() {
        let fam = Arc::new(
            GeneralFamily::new(
                vec![(ScalarField::constant(), MatrixStore::Dense(CMat::eye(5)))],
                1,
            )
            .unwrap(),
        );
        let b = BoxDomain::interval(-2.0, 2.0);
        let mut opts = SubspaceOptions::new(Sense::Minimize, 1, -1.0);
        opts.tol = 1e-12;
        let run = optimize_sv_smallest(SvSmallestSource::Family(fam), &b, &opts).unwrap();
        assert_eq!(run.status, RunStatus::Converged);
        assert!((run.final_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutting_plane_on_crossing() {
        let fam = crossing_family();
        let b = BoxDomain::interval(0.0, 1.0);
        let mut opts = SubspaceOptions::new(Sense::Minimize, 1, 0.0);
        opts.max_outer = Some(12);
        let run = cutting_plane_min(fam, &b, 1e-10, &opts).unwrap();
        assert_eq!(run.status, RunStatus::Converged);
        assert!((run.final_value - 0.5).abs() < 1e-8, "value {}", run.final_value);
    }

    #[test]
    fn cutting_plane_rejects_trig() {
        let fam = Arc::new(
            HermitianFamily::new(
                vec![(ScalarField::cosine(0), MatrixStore::Dense(CMat::eye(3)))],
                1,
            )
            .unwrap(),
        );
        let b = BoxDomain::interval(0.0, 1.0);
        let opts = SubspaceOptions::new(Sense::Minimize, 1, 0.0);
        assert!(cutting_plane_min(fam, &b, 1e-10, &opts).is_err());
    }
}
