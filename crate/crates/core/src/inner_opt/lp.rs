//! Small-dimensional linear programming by Seidel's randomized incremental
//! algorithm. Dimensions here are at most the parameter count plus one, so
//! the recursion depth is tiny and the expected cost is linear in the number
//! of constraints.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FEAS_EPS: f64 = 1e-12;

/// minimize c·x  s.t.  a_i·x ≤ b_i  and  lo ≤ x ≤ hi (componentwise).
///
/// Returns None when infeasible (within tolerance). The box must be bounded.
pub fn lp_minimize(
    c: &[f64],
    constraints: &[(Vec<f64>, f64)],
    lo: &[f64],
    hi: &[f64],
    seed: u64,
) -> Option<Vec<f64>> {
    let d = c.len();
    assert!(d >= 1);
    let mut order: Vec<usize> = (0..constraints.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Deterministic Fisher-Yates.
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let shuffled: Vec<(Vec<f64>, f64)> = order
        .iter()
        .map(|&i| (constraints[i].0.clone(), constraints[i].1))
        .collect();
    solve_rec(c, &shuffled, lo, hi)
}

fn scale_of(a: &[f64], b: f64) -> f64 {
    a.iter().fold(b.abs(), |acc, x| acc.max(x.abs())).max(1.0)
}

fn solve_rec(
    c: &[f64],
    constraints: &[(Vec<f64>, f64)],
    lo: &[f64],
    hi: &[f64],
) -> Option<Vec<f64>> {
    let d = c.len();
    if d == 1 {
        let mut l = lo[0];
        let mut h = hi[0];
        for (a, b) in constraints {
            let aa = a[0];
            let eps = FEAS_EPS * scale_of(a, *b);
            if aa.abs() <= 1e-14 * scale_of(a, *b) {
                // Constant constraint 0 ≤ b.
                if *b < -eps {
                    return None;
                }
                continue;
            }
            let bound = b / aa;
            if aa > 0.0 {
                h = h.min(bound);
            } else {
                l = l.max(bound);
            }
        }
        if l > h + FEAS_EPS * (1.0 + l.abs().max(h.abs())) {
            return None;
        }
        if l > h {
            let mid = 0.5 * (l + h);
            return Some(vec![mid]);
        }
        return Some(vec![if c[0] >= 0.0 { l } else { h }]);
    }

    // Start from the box corner minimizing the objective.
    let mut x: Vec<f64> = (0..d)
        .map(|q| if c[q] >= 0.0 { lo[q] } else { hi[q] })
        .collect();

    for (i, (a, b)) in constraints.iter().enumerate() {
        let viol = dot(a, &x) - b;
        if viol <= FEAS_EPS * scale_of(a, *b) * (1.0 + norm1(&x)) {
            continue;
        }
        // The optimum of the first i+1 constraints lies on a·x = b.
        // Eliminate the variable with the largest coefficient.
        let k = (0..d)
            .max_by(|&p, &q| a[p].abs().partial_cmp(&a[q].abs()).unwrap())
            .unwrap();
        if a[k].abs() <= FEAS_EPS * scale_of(a, *b) {
            return None;
        }
        // x_k = (b − Σ_{j≠k} a_j x_j) / a_k =: β − Σ α_j x_j.
        let beta = b / a[k];
        let alpha: Vec<f64> = (0..d)
            .filter(|&j| j != k)
            .map(|j| a[j] / a[k])
            .collect();

        // Reduced objective: c·x = c_k(β − α·y) + Σ c_j y_j.
        let mut c2: Vec<f64> = Vec::with_capacity(d - 1);
        let mut pos = 0;
        for j in 0..d {
            if j == k {
                continue;
            }
            c2.push(c[j] - c[k] * alpha[pos]);
            pos += 1;
        }
        // Reduced constraints: previous i constraints plus the box bounds
        // on x_k.
        let mut cons2: Vec<(Vec<f64>, f64)> = Vec::with_capacity(i + 2);
        for (aa, bb) in constraints.iter().take(i) {
            let mut row: Vec<f64> = Vec::with_capacity(d - 1);
            let mut pos = 0;
            for j in 0..d {
                if j == k {
                    continue;
                }
                row.push(aa[j] - aa[k] * alpha[pos]);
                pos += 1;
            }
            cons2.push((row, bb - aa[k] * beta));
        }
        // lo_k ≤ β − α·y ≤ hi_k.
        cons2.push((alpha.clone(), beta - lo[k]));
        cons2.push((alpha.iter().map(|v| -v).collect(), hi[k] - beta));

        let lo2: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| lo[j]).collect();
        let hi2: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| hi[j]).collect();
        let y = solve_rec(&c2, &cons2, &lo2, &hi2)?;
        // Reassemble x.
        let mut full = vec![0.0; d];
        let mut pos = 0;
        let mut xk = beta;
        for j in 0..d {
            if j == k {
                continue;
            }
            full[j] = y[pos];
            xk -= alpha[pos] * y[pos];
            pos += 1;
        }
        full[k] = xk.max(lo[k]).min(hi[k]);
        x = full;
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_only() {
        let x = lp_minimize(&[1.0, -1.0], &[], &[0.0, 0.0], &[2.0, 3.0], 1).unwrap();
        assert_eq!(x, vec![0.0, 3.0]);
    }

    #[test]
    fn single_cut() {
        // minimize x + y s.t. x + y >= 1 (as -x - y <= -1) on [0,2]².
        let cons = vec![(vec![-1.0, -1.0], -1.0)];
        let x = lp_minimize(&[1.0, 1.0], &cons, &[0.0, 0.0], &[2.0, 2.0], 7).unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn epigraph_of_max_affine() {
        // minimize t s.t. t >= x, t >= -x on x ∈ [-1, 1]: optimum t = 0 at 0.
        let cons = vec![
            (vec![1.0, -1.0], 0.0),  // x - t <= 0
            (vec![-1.0, -1.0], 0.0), // -x - t <= 0
        ];
        let sol = lp_minimize(&[0.0, 1.0], &cons, &[-1.0, -10.0], &[1.0, 10.0], 3).unwrap();
        assert!(sol[1].abs() < 1e-8, "{sol:?}");
        assert!(sol[0].abs() < 1e-8, "{sol:?}");
    }

    #[test]
    fn infeasible_detected() {
        let cons = vec![(vec![1.0], -5.0), (vec![-1.0], -5.0)]; // x <= -5 and x >= 5
        assert!(lp_minimize(&[1.0], &cons, &[-10.0], &[10.0], 5).is_none());
    }

    #[test]
    fn three_dimensional() {
        // minimize z s.t. z >= x + y, z >= -x - y + 1 over the unit box:
        // optimum on the crossing plane x + y = 0.5 at z = 0.5.
        let cons = vec![
            (vec![1.0, 1.0, -1.0], 0.0),
            (vec![-1.0, -1.0, -1.0], -1.0),
        ];
        let sol = lp_minimize(
            &[0.0, 0.0, 1.0],
            &cons,
            &[0.0, 0.0, -10.0],
            &[1.0, 1.0, 10.0],
            11,
        )
        .unwrap();
        assert!((sol[2] - 0.5).abs() < 1e-8, "{sol:?}");
    }
}
