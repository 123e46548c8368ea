//! Convex-weight feasibility: find weights `w` on the simplex such that the
//! mixture `Σ_v w_v v` lies coordinate-wise in given intervals.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

/// Slack allowed when validating a solver answer against the boxes.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Weights over `vertices` whose mixture satisfies `lo[t] <= m[t] <= hi[t]`
/// for each coordinate, or `None` when no such mixture exists.
pub fn convex_weights(vertices: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> Option<Vec<f64>> {
    let dim = lo.len();
    debug_assert!(vertices.iter().all(|v| v.len() == dim) && hi.len() == dim);
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return None;
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = vertices.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let simplex: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(&simplex, ComparisonOp::Eq, 1.0);
    for t in 0..dim {
        let expr: Vec<_> = vars
            .iter()
            .zip(vertices)
            .filter(|(_, v)| v[t] != 0.0)
            .map(|(&var, v)| (var, v[t]))
            .collect();
        if lo[t] == hi[t] {
            lp.add_constraint(&expr, ComparisonOp::Eq, lo[t]);
            continue;
        }
        if lo[t] > 0.0 {
            lp.add_constraint(&expr, ComparisonOp::Ge, lo[t]);
        }
        if hi[t] < 1.0 {
            lp.add_constraint(&expr, ComparisonOp::Le, hi[t]);
        }
    }
    let SolveOutcome::Solution(solution) = lp.solve().ok()? else {
        return None;
    };
    let mut w: Vec<f64> = vars.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= total);
    let m = mixture(vertices, &w);
    let ok = (0..dim).all(|t| m[t] >= lo[t] - VALIDATION_TOL && m[t] <= hi[t] + VALIDATION_TOL);
    ok.then_some(w)
}

/// `Σ_v w_v v`.
pub fn mixture(vertices: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let dim = vertices.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (v, &w) in vertices.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}
