//! Global optimization of the reduced problems over a box: piecewise
//! quadratic support functions with a shared curvature bound γ.
//!
//! Each objective evaluation (value and gradient) contributes the support
//! q_j(ω) = f(ω_j) + ∇f(ω_j)·(ω−ω_j) + (γ/2)‖ω−ω_j‖², which under-estimates
//! the objective whenever γ is a valid lower bound on its second derivatives.
//! The next sample is the global minimizer of the pointwise maximum of the
//! supports; the envelope minimum value is a lower bound for the objective
//! and the smallest sampled value an upper bound, so the gap between them
//! certifies termination. With γ = 0 the supports degenerate to cutting
//! planes.
//!
//! In one dimension the envelope minimization is exact (all supports share
//! their curvature, so differences are affine and the envelope reduces to an
//! upper hull of lines). In higher dimensions it is a heuristic: candidate
//! seeds plus majorize-minimize descents that solve small LPs; the resulting
//! bound is flagged as uncertified.

mod env1d;
mod lp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::BoxDomain;
use crate::{Error, Result};

/// One quadratic support function.
#[derive(Clone, Debug)]
pub struct QuadraticSupport {
    pub anchor: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub curvature: f64,
}

impl QuadraticSupport {
    pub fn eval(&self, w: &[f64]) -> f64 {
        let mut acc = self.value;
        let mut dist2 = 0.0;
        for q in 0..w.len() {
            let dw = w[q] - self.anchor[q];
            acc += self.gradient[q] * dw;
            dist2 += dw * dw;
        }
        acc + 0.5 * self.curvature * dist2
    }

    /// Affine part after splitting off the common (γ/2)‖ω‖² term:
    /// q(ω) = (γ/2)‖ω‖² + a·ω + b.
    fn affine_split(&self) -> (Vec<f64>, f64) {
        let g = self.curvature;
        let a: Vec<f64> = self
            .gradient
            .iter()
            .zip(&self.anchor)
            .map(|(gr, an)| gr - g * an)
            .collect();
        let mut b = self.value;
        let mut anorm2 = 0.0;
        for q in 0..self.anchor.len() {
            b -= self.gradient[q] * self.anchor[q];
            anorm2 += self.anchor[q] * self.anchor[q];
        }
        (a, b + 0.5 * g * anorm2)
    }
}

/// Tolerance for the support-underestimation audit, relative to scale.
const UNDERESTIMATE_TOL: f64 = 1e-9;

/// Bookkeeping of the envelope, the incumbent and the bound.
pub struct EnvelopeState {
    pub supports: Vec<QuadraticSupport>,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub lower_bound: f64,
    /// All evaluations, in order.
    pub history: Vec<(Vec<f64>, f64)>,
    box_domain: BoxDomain,
    curvature: f64,
    seed: u64,
    /// Fixed probe set (corners, seeded points, coarse grid) with envelope
    /// values maintained incrementally. Empty in one dimension.
    probes: Vec<Vec<f64>>,
    probe_env: Vec<f64>,
    /// Envelope values at the support anchors, also incremental.
    anchor_env: Vec<f64>,
    curvature_violated: bool,
}

impl EnvelopeState {
    pub fn new(box_domain: BoxDomain, curvature: f64, seed: u64) -> Self {
        let d = box_domain.dim();
        let mut probes = Vec::new();
        if d >= 2 {
            if d <= 5 {
                probes.extend(box_domain.corners());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x70b3_5eed);
            for _ in 0..32 {
                probes.push(box_domain.sample_uniform(&mut rng));
            }
            if d <= 3 {
                probes.extend(box_domain.grid(17));
            }
        }
        let probe_env = vec![f64::NEG_INFINITY; probes.len()];
        EnvelopeState {
            supports: Vec::new(),
            best_point: Vec::new(),
            best_value: f64::INFINITY,
            lower_bound: f64::NEG_INFINITY,
            history: Vec::new(),
            box_domain,
            curvature,
            seed,
            probes,
            probe_env,
            anchor_env: Vec::new(),
            curvature_violated: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.box_domain.dim()
    }

    pub fn curvature_violated(&self) -> bool {
        self.curvature_violated
    }

    /// Envelope value at a point.
    pub fn envelope_at(&self, w: &[f64]) -> f64 {
        self.supports
            .iter()
            .map(|s| s.eval(w))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Add the support from one evaluation and keep incumbent, probes and the
    /// underestimation audit current.
    pub fn add_support(&mut self, anchor: Vec<f64>, value: f64, gradient: Vec<f64>) {
        let support = QuadraticSupport {
            anchor: anchor.clone(),
            value,
            gradient,
            curvature: self.curvature,
        };
        let scale = 1.0 + value.abs();
        // The new support must stay below all sampled values, and the old
        // supports below the new sample.
        for (x, fx) in &self.history {
            if support.eval(x) > fx + UNDERESTIMATE_TOL * (1.0 + fx.abs()) {
                self.curvature_violated = true;
            }
        }
        for s in &self.supports {
            if s.eval(&anchor) > value + UNDERESTIMATE_TOL * scale {
                self.curvature_violated = true;
            }
        }
        for (i, p) in self.probes.iter().enumerate() {
            self.probe_env[i] = self.probe_env[i].max(support.eval(p));
        }
        for (i, s) in self.supports.iter().enumerate() {
            self.anchor_env[i] = self.anchor_env[i].max(support.eval(&s.anchor));
        }
        let env_here = self
            .supports
            .iter()
            .map(|s| s.eval(&anchor))
            .fold(support.eval(&anchor), f64::max);
        self.anchor_env.push(env_here);
        if value < self.best_value
            || (value == self.best_value && lex_less(&anchor, &self.best_point))
        {
            self.best_value = value;
            self.best_point = anchor.clone();
        }
        self.history.push((anchor, value));
        self.supports.push(support);
    }

    /// Global minimizer of the envelope over the box: exact in one dimension,
    /// candidate-and-descent heuristic otherwise. Returns (point, value).
    pub fn envelope_minimum(&self) -> (Vec<f64>, f64) {
        assert!(!self.supports.is_empty());
        if self.dim() == 1 {
            let lines: Vec<(f64, f64)> = self
                .supports
                .iter()
                .map(|s| {
                    let (a, b) = s.affine_split();
                    (a[0], b)
                })
                .collect();
            let (x, v) = env1d::min_envelope_1d(
                self.curvature,
                &lines,
                self.box_domain.lower()[0],
                self.box_domain.upper()[0],
            );
            return (vec![x], v);
        }
        self.envelope_minimum_nd()
    }

    fn envelope_minimum_nd(&self) -> (Vec<f64>, f64) {
        fn consider(best: &mut (Vec<f64>, f64), p: &[f64], v: f64) {
            if v < best.1 || (v == best.1 && lex_less(p, &best.0)) {
                best.1 = v;
                best.0 = p.to_vec();
            }
        }
        let mut best = (Vec::new(), f64::INFINITY);
        for (p, &v) in self.probes.iter().zip(&self.probe_env) {
            consider(&mut best, p, v);
        }
        for (s, &v) in self.supports.iter().zip(&self.anchor_env) {
            consider(&mut best, &s.anchor, v);
        }
        // Descend from the most promising seeds.
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        if !best.0.is_empty() {
            seeds.push(best.0.clone());
        }
        let mut anchor_order: Vec<usize> = (0..self.supports.len()).collect();
        anchor_order
            .sort_by(|&a, &b| self.anchor_env[a].partial_cmp(&self.anchor_env[b]).unwrap());
        for &i in anchor_order.iter().take(3) {
            seeds.push(self.supports[i].anchor.clone());
        }
        for (si, seed) in seeds.iter().enumerate() {
            if let Some(p) = self.descend(seed, si as u64) {
                let v = self.envelope_at(&p);
                consider(&mut best, &p, v);
            }
        }
        best
    }

    /// Majorize-minimize descent on the envelope. The concave curvature part
    /// is replaced by its tangent; each step is a small epigraph LP over the
    /// cuts. For γ > 0 the curvature is dropped from the model (the supports
    /// remain valid underestimators), and the LP point is polished by exact
    /// coordinate line searches.
    fn descend(&self, start: &[f64], salt: u64) -> Option<Vec<f64>> {
        let d = self.dim();
        let g = self.curvature;
        let splits: Vec<(Vec<f64>, f64)> =
            self.supports.iter().map(|s| s.affine_split()).collect();
        // Epigraph constraints a·ω − t ≤ −b plus bounds for t from the affine
        // ranges over the box.
        let mut tmin = f64::NEG_INFINITY;
        let mut tmax = f64::NEG_INFINITY;
        for (a, b) in &splits {
            let mut low = *b;
            let mut high = *b;
            for q in 0..d {
                let (l, h) = (
                    a[q] * self.box_domain.lower()[q],
                    a[q] * self.box_domain.upper()[q],
                );
                low += l.min(h);
                high += l.max(h);
            }
            tmin = tmin.max(low);
            tmax = tmax.max(high);
        }
        let mut cons: Vec<(Vec<f64>, f64)> = Vec::with_capacity(splits.len());
        for (a, b) in &splits {
            let mut row = a.clone();
            row.push(-1.0);
            cons.push((row, -b));
        }
        let mut lo = self.box_domain.lower().to_vec();
        let mut hi = self.box_domain.upper().to_vec();
        lo.push(tmin - 1.0);
        hi.push(tmax + 1.0);

        let mut x = start.to_vec();
        let effective_g = g.min(0.0);
        for it in 0..40 {
            // minimize (γ x_t)·ω + t, the tangent majorant of the envelope.
            let mut c: Vec<f64> = x.iter().map(|v| effective_g * v).collect();
            c.push(1.0);
            let sol = lp::lp_minimize(
                &c,
                &cons,
                &lo,
                &hi,
                self.seed ^ salt.wrapping_mul(0x9e37_79b9).wrapping_add(it),
            )?;
            let new_x: Vec<f64> = sol[..d].to_vec();
            let step: f64 = new_x
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = new_x;
            let width: f64 = (0..d)
                .map(|q| self.box_domain.upper()[q] - self.box_domain.lower()[q])
                .fold(0.0, f64::max);
            if effective_g == 0.0 || step <= 1e-15 * (1.0 + width) {
                break;
            }
        }
        if g > 0.0 {
            x = self.coordinate_polish(x);
        }
        Some(self.box_domain.clip(&x))
    }

    /// Cyclic exact line searches along the coordinate axes; each restriction
    /// of the envelope to a line is a one-dimensional equal-curvature
    /// envelope, minimized exactly.
    fn coordinate_polish(&self, mut x: Vec<f64>) -> Vec<f64> {
        let d = self.dim();
        for _ in 0..20 {
            let mut moved = 0.0f64;
            for q in 0..d {
                let lines: Vec<(f64, f64)> = self
                    .supports
                    .iter()
                    .map(|s| {
                        // q_s(x + t e_q) as a quadratic in t with curvature γ.
                        let mut val = s.value;
                        let mut dist2 = 0.0;
                        for r in 0..d {
                            if r == q {
                                continue;
                            }
                            let dw = x[r] - s.anchor[r];
                            val += s.gradient[r] * dw;
                            dist2 += dw * dw;
                        }
                        // At coordinate q: value + g_q(t − a_q) + (γ/2)(t − a_q)²
                        // plus the frozen cross terms.
                        let aq = s.anchor[q];
                        let a = s.gradient[q] - s.curvature * aq;
                        let b = val + 0.5 * s.curvature * dist2 - s.gradient[q] * aq
                            + 0.5 * s.curvature * aq * aq;
                        (a, b)
                    })
                    .collect();
                let (t, _) = env1d::min_envelope_1d(
                    self.curvature,
                    &lines,
                    self.box_domain.lower()[q],
                    self.box_domain.upper()[q],
                );
                moved = moved.max((t - x[q]).abs());
                x[q] = t;
            }
            if moved <= 1e-14 {
                break;
            }
        }
        x
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    if b.is_empty() {
        return true;
    }
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Options for the box-constrained global solves.
#[derive(Clone, Debug)]
pub struct InnerOptions {
    /// Global curvature bound γ: a lower bound on second derivatives for
    /// minimization (an upper bound is passed to [`maximize_box`]).
    pub curvature: f64,
    /// Terminate when best − lower bound ≤ tol.
    pub tol: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// First evaluation point; the box center when absent.
    pub start: Option<Vec<f64>>,
}

impl InnerOptions {
    pub fn new(curvature: f64, tol: f64) -> Self {
        InnerOptions {
            curvature,
            tol,
            max_evals: 5000,
            seed: 0,
            start: None,
        }
    }
}

/// Result of a box-constrained global solve, in the caller's orientation.
#[derive(Clone, Debug)]
pub struct InnerOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Lower bound for minimization, upper bound for maximization.
    pub bound: f64,
    pub evals: usize,
    /// True when the bound comes from the exact one-dimensional envelope
    /// minimization; the d ≥ 2 bound is heuristic.
    pub certified: bool,
    /// Set when a support exceeded a sampled value beyond tolerance, i.e.
    /// the supplied curvature was not a valid bound.
    pub curvature_violated: bool,
    pub history: Vec<(Vec<f64>, f64)>,
}

/// Globally minimize over the box with quadratic supports of curvature γ.
pub fn minimize_box(
    mut objective: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    box_domain: &BoxDomain,
    opts: &InnerOptions,
) -> Result<InnerOutcome> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidOptions("inner tolerance must be positive".into()));
    }
    if !opts.curvature.is_finite() {
        return Err(Error::InvalidOptions("curvature must be finite".into()));
    }
    let d = box_domain.dim();
    let mut state = EnvelopeState::new(box_domain.clone(), opts.curvature, opts.seed);
    let mut x = match &opts.start {
        Some(p) => box_domain.clip(p),
        None => box_domain.center(),
    };
    let mut evals = 0usize;
    let mut stalls = 0usize;
    let converged;
    loop {
        let (value, gradient) = match objective(&x) {
            Ok(pair) => pair,
            Err(e) => {
                return Err(Error::ObjectiveFailure {
                    evals,
                    message: format!("{e} (best so far: {:.6e})", state.best_value),
                });
            }
        };
        if gradient.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "objective gradient has length {}, expected {d}",
                gradient.len()
            )));
        }
        state.add_support(x.clone(), value, gradient);
        evals += 1;
        let (cand, env_min) = state.envelope_minimum();
        state.lower_bound = state.lower_bound.max(env_min);
        if state.best_value - state.lower_bound <= opts.tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            converged = false;
            break;
        }
        // A candidate that repeats an anchor cannot improve the envelope;
        // nudge once, then accept the incumbent.
        let duplicate = state
            .history
            .iter()
            .any(|(p, _)| max_abs_diff(p, &cand) <= 1e-14 * (1.0 + max_abs(p)));
        if duplicate {
            stalls += 1;
            if stalls >= 3 {
                converged = false;
                break;
            }
            let center = box_domain.center();
            x = box_domain.clip(
                &cand
                    .iter()
                    .zip(&center)
                    .map(|(c, m)| c + 1e-9 * (m - c) + 1e-12)
                    .collect::<Vec<f64>>(),
            );
        } else {
            stalls = 0;
            x = cand;
        }
    }
    let _ = converged;
    Ok(InnerOutcome {
        point: state.best_point.clone(),
        value: state.best_value,
        bound: state.lower_bound,
        evals,
        certified: d == 1,
        curvature_violated: state.curvature_violated(),
        history: state.history,
    })
}

/// Globally maximize over the box; γ_upper bounds the second derivatives from
/// above. Implemented as minimization of the negated objective with curvature
/// −γ_upper; bounds are reported in the original orientation.
pub fn maximize_box(
    mut objective: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    box_domain: &BoxDomain,
    opts: &InnerOptions,
) -> Result<InnerOutcome> {
    let flipped = InnerOptions {
        curvature: -opts.curvature,
        ..opts.clone()
    };
    let neg = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = objective(w)?;
        Ok((-v, g.iter().map(|x| -x).collect()))
    };
    let mut out = minimize_box(neg, box_domain, &flipped)?;
    out.value = -out.value;
    out.bound = -out.bound;
    for (_, v) in out.history.iter_mut() {
        *v = -*v;
    }
    Ok(out)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> BoxDomain {
        BoxDomain::interval(lo, hi)
    }

    #[test]
    fn exact_quadratic_model() {
        // f(ω) = ω² with γ = 2: one support is already the function.
        let opts = InnerOptions {
            start: Some(vec![0.7]),
            ..InnerOptions::new(2.0, 1e-10)
        };
        let out = minimize_box(
            |w| Ok((w[0] * w[0], vec![2.0 * w[0]])),
            &interval(-1.0, 1.0),
            &opts,
        )
        .unwrap();
        assert!(out.evals <= 30, "evals {}", out.evals);
        assert!(out.value <= 1e-10, "value {}", out.value);
        assert!(out.point[0].abs() < 1e-5);
        assert!(out.value - out.bound <= 1e-10);
        assert!(!out.curvature_violated);
    }

    #[test]
    fn kink_with_cutting_planes() {
        // f(ω) = |ω − 0.3| with γ = 0 behaves like Kelley's method.
        let opts = InnerOptions::new(0.0, 1e-9);
        let out = minimize_box(
            |w| {
                let t = w[0] - 0.3;
                Ok((t.abs(), vec![if t >= 0.0 { 1.0 } else { -1.0 }]))
            },
            &interval(0.0, 1.0),
            &opts,
        )
        .unwrap();
        assert!((out.point[0] - 0.3).abs() <= 1e-8, "point {:?}", out.point);
        assert!(out.value <= 1e-8);
    }

    #[test]
    fn constant_objective_two_evals() {
        let opts = InnerOptions::new(0.0, 1e-12);
        let out = minimize_box(|w| Ok((4.25, vec![0.0; w.len()])), &interval(-1.0, 2.0), &opts)
            .unwrap();
        assert!(out.evals <= 2, "evals {}", out.evals);
        assert!((out.value - 4.25).abs() < 1e-15);
        assert!(out.value - out.bound <= 1e-12);
    }

    #[test]
    fn maximize_reports_upper_bound() {
        // f(ω) = −(ω − 0.2)², maximize with γ_upper = 0.
        let opts = InnerOptions::new(0.0, 1e-9);
        let out = maximize_box(
            |w| {
                let t = w[0] - 0.2;
                Ok((-t * t, vec![-2.0 * t]))
            },
            &interval(-1.0, 1.0),
            &opts,
        )
        .unwrap();
        assert!((out.point[0] - 0.2).abs() < 1e-4, "point {:?}", out.point);
        assert!(out.bound >= out.value - 1e-12);
        assert!(out.value > -1e-8);
    }

    #[test]
    fn curvature_violation_flagged() {
        // γ = +5 is not a lower curvature bound for f = −ω².
        let opts = InnerOptions {
            max_evals: 12,
            start: Some(vec![0.8]),
            ..InnerOptions::new(5.0, 1e-9)
        };
        let out = minimize_box(
            |w| Ok((-w[0] * w[0], vec![-2.0 * w[0]])),
            &interval(-1.0, 1.0),
            &opts,
        )
        .unwrap();
        assert!(out.curvature_violated);
    }

    #[test]
    fn objective_error_propagates() {
        let opts = InnerOptions::new(0.0, 1e-9);
        let res = minimize_box(
            |w| {
                if w[0] > 0.4 {
                    Err(Error::Invalid("synthetic failure".into()))
                } else {
                    Ok((w[0], vec![1.0]))
                }
            },
            &interval(0.0, 1.0),
            &opts,
        );
        assert!(matches!(res, Err(Error::ObjectiveFailure { .. })));
    }

    #[test]
    fn two_dimensional_bowl() {
        // Smooth strictly convex bowl, exact curvature; heuristic envelope
        // minimization must still land on the minimizer.
        let opts = InnerOptions {
            max_evals: 400,
            ..InnerOptions::new(2.0, 1e-8)
        };
        let b = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let out = minimize_box(
            |w| {
                let (x, y) = (w[0] - 0.25, w[1] + 0.5);
                Ok((x * x + y * y, vec![2.0 * x, 2.0 * y]))
            },
            &b,
            &opts,
        )
        .unwrap();
        assert!((out.point[0] - 0.25).abs() < 1e-4, "{:?}", out.point);
        assert!((out.point[1] + 0.5).abs() < 1e-4, "{:?}", out.point);
        assert!(!out.certified);
    }
}
