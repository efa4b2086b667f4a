//! Exact minimization of a one-dimensional envelope of equal-curvature
//! quadratic supports.
//!
//! Every support shares the curvature γ, so q_j(ω) = (γ/2)ω² + a_jω + b_j and
//! the envelope is (γ/2)ω² plus an upper hull of lines. The hull is built by a
//! monotone chain over slopes; on each hull segment the envelope is a single
//! parabola piece whose minimum is at a segment endpoint (γ ≤ 0) or at the
//! clipped vertex (γ > 0).

#[derive(Clone, Copy, Debug)]
struct Line {
    a: f64,
    b: f64,
}

impl Line {
    fn at(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

/// Exact global minimum of (γ/2)ω² + max_j(a_jω + b_j) over [lo, hi].
/// Ties keep the leftmost point. Returns (argmin, min).
///
/// The hull lines are active left-to-right in slope order, so each hull
/// segment is visited once with its own line; the total cost is the hull
/// construction sort.
pub fn min_envelope_1d(gamma: f64, lines: &[(f64, f64)], lo: f64, hi: f64) -> (f64, f64) {
    assert!(!lines.is_empty());
    if lo == hi {
        let v = lines
            .iter()
            .map(|&(a, b)| a * lo + b)
            .fold(f64::NEG_INFINITY, f64::max);
        return (lo, 0.5 * gamma * lo * lo + v);
    }
    let hull = upper_hull(lines);
    // Breakpoints between consecutive hull lines, increasing by construction.
    let bps: Vec<f64> = hull
        .windows(2)
        .map(|w| (w[0].b - w[1].b) / (w[1].a - w[0].a))
        .collect();

    let mut best_x = f64::NAN;
    let mut best_v = f64::INFINITY;
    let mut consider = |x: f64, line: &Line| {
        let v = 0.5 * gamma * x * x + line.at(x);
        if v < best_v || (v == best_v && x < best_x) {
            best_v = v;
            best_x = x;
        }
    };
    for (i, line) in hull.iter().enumerate() {
        let seg_lo = if i == 0 { lo } else { bps[i - 1].max(lo) };
        let seg_hi = if i + 1 == hull.len() { hi } else { bps[i].min(hi) };
        if seg_lo > seg_hi {
            continue;
        }
        consider(seg_lo, line);
        consider(seg_hi, line);
        if gamma > 0.0 {
            // Convex piece: the vertex is a candidate when interior.
            let vx = -line.a / gamma;
            if vx > seg_lo && vx < seg_hi {
                consider(vx, line);
            }
        }
    }
    (best_x, best_v)
}

/// Pointwise envelope value.
#[cfg(test)]
pub fn env_value_1d(gamma: f64, lines: &[(f64, f64)], x: f64) -> f64 {
    let m = lines
        .iter()
        .map(|&(a, b)| a * x + b)
        .fold(f64::NEG_INFINITY, f64::max);
    0.5 * gamma * x * x + m
}

/// Upper hull of lines (max envelope), as lines of strictly increasing slope
/// active from left to right.
fn upper_hull(lines: &[(f64, f64)]) -> Vec<Line> {
    let mut sorted: Vec<Line> = lines.iter().map(|&(a, b)| Line { a, b }).collect();
    sorted.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap().then(x.b.partial_cmp(&y.b).unwrap()));
    // Among equal slopes only the largest intercept survives.
    let mut dedup: Vec<Line> = Vec::with_capacity(sorted.len());
    for l in sorted {
        if let Some(last) = dedup.last() {
            if l.a == last.a {
                *dedup.last_mut().unwrap() = l;
                continue;
            }
        }
        dedup.push(l);
    }
    let mut hull: Vec<Line> = Vec::with_capacity(dedup.len());
    for l in dedup {
        while hull.len() >= 2 {
            let l1 = hull[hull.len() - 2];
            let l2 = hull[hull.len() - 1];
            // l2 is dominated when the new line overtakes l1 no later than
            // l2 does: (b1−b)(a2−a1) ≤ (b1−b2)(a−a1).
            if (l1.b - l.b) * (l2.a - l1.a) <= (l1.b - l2.b) * (l.a - l1.a) {
                hull.pop();
            } else {
                break;
            }
        }
        if hull.len() == 1 && hull[0].a == l.a {
            // Same slope (should not survive dedupe); keep the higher line.
            if l.b > hull[0].b {
                hull[0] = l;
            }
            continue;
        }
        hull.push(l);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_constant_support() {
        let (x, v) = min_envelope_1d(0.0, &[(0.0, 1.0)], -2.0, 3.0);
        // Flat envelope: leftmost point.
        assert_eq!(x, -2.0);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_parabolas() {
        // Two supports with γ = 2 anchored at ±1, zero gradients, zero
        // values: q_±(ω) = (ω ∓ 1)², envelope min 1 at ω = 0.
        let gamma = 2.0;
        // q(ω) = v + g(ω−ω0) + (γ/2)(ω−ω0)² → a = g − γω0, b = v − gω0 + (γ/2)ω0².
        let mk = |omega0: f64, v: f64, g: f64| (g - gamma * omega0, v - g * omega0 + 0.5 * gamma * omega0 * omega0);
        let lines = [mk(1.0, 0.0, 0.0), mk(-1.0, 0.0, 0.0)];
        let (x, v) = min_envelope_1d(gamma, &lines, -3.0, 3.0);
        assert!(x.abs() < 1e-12, "x = {x}");
        assert!((v - 1.0).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn hull_prunes_dominated() {
        // Middle line dominated everywhere.
        let lines = [(-1.0, 0.0), (0.0, -10.0), (1.0, 0.0)];
        let (x, v) = min_envelope_1d(0.0, &lines, -5.0, 5.0);
        assert!(x.abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn convex_vertex_interior() {
        // One support, γ = 2, anchored with gradient: min at the vertex.
        let gamma = 2.0;
        let lines = [(-(gamma * 0.5), 0.25 + 0.5 * gamma * 0.25)];
        // q(ω) = (γ/2)(ω − 0.5)² + 0.25, vertex at 0.5.
        let (x, v) = min_envelope_1d(gamma, &lines, -1.0, 1.0);
        assert!((x - 0.5).abs() < 1e-12);
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn brute_force_agreement() {
        // Pseudo-random supports vs a fine scan, both curvature signs.
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for &gamma in &[-2.0, 0.0, 1.5] {
            let lines: Vec<(f64, f64)> = (0..25).map(|_| (4.0 * next(), 2.0 * next())).collect();
            let (_, v) = min_envelope_1d(gamma, &lines, -1.0, 2.0);
            let mut brute = f64::INFINITY;
            for i in 0..=200000 {
                let x = -1.0 + 3.0 * i as f64 / 200000.0;
                brute = brute.min(env_value_1d(gamma, &lines, x));
            }
            assert!(
                v <= brute + 1e-9 && v >= brute - 1e-4,
                "gamma={gamma}: exact {v} vs brute {brute}"
            );
        }
    }
}
