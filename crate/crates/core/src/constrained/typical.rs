use serde::{Deserialize, Serialize};

use super::ProductPolyhedron;
use crate::chain::TransitionMatrix;
use crate::error::{check_open_interval, Result};
use crate::feasibility::{convex_weights, mixture};
use crate::sequence::ObservedSequence;

/// Margin subtracted from `ε` and from the cap so the feasible region is
/// closed while the strict inequalities still hold.
const MARGINS: [f64; 2] = [1e-12, 1e-9];

/// Witness that a sequence is typical: a kernel in `V` that is relatively
/// close to the observed kernel on every frequent transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityCertificate {
    pub v: TransitionMatrix,
    /// Convex weights over the vertices of `V(s)` reproducing row `s` of `v`.
    pub weights: Vec<Vec<f64>>,
    /// Pairs `(s,t)` with `N_s max{p(s,t), v(s,t)} >= N^δ`.
    pub active_pairs: Vec<(usize, usize)>,
    pub n: u64,
    pub delta: f64,
    pub epsilon: f64,
}

impl TypicalityCertificate {
    /// Largest `|1 - v(s,t)/p(s,t)|` over the active pairs.
    pub fn max_relative_deviation(&self, p: &TransitionMatrix) -> f64 {
        self.active_pairs
            .iter()
            .map(|&(s, t)| relative_deviation(self.v.get(s, t), p.get(s, t)))
            .fold(0.0, f64::max)
    }

    /// Rows reproduce from the stored weights and every active pair is
    /// strictly within `ε`.
    pub fn validate(&self, x: &ObservedSequence, v: &ProductPolyhedron) -> bool {
        let p = x.count_transitions().observed_transition_matrix().matrix;
        let rows_ok = (0..v.num_states()).all(|s| {
            let m = mixture(v.get(s).vertices(), &self.weights[s]);
            m.iter().zip(self.v.row(s)).all(|(a, b)| (a - b).abs() <= 1e-9)
        });
        rows_ok && self.max_relative_deviation(&p) < self.epsilon
    }
}

pub(crate) fn relative_deviation(v: f64, p: f64) -> f64 {
    if p > 0.0 {
        (1.0 - v / p).abs()
    } else if v > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Typicality {
    Typical(TypicalityCertificate),
    /// No admissible row exists for `state`.
    NotTypical {
        state: usize,
    },
}

impl Typicality {
    pub fn certificate(&self) -> Option<&TypicalityCertificate> {
        match self {
            Typicality::Typical(c) => Some(c),
            Typicality::NotTypical { .. } => None,
        }
    }
}

/// Per-coordinate admissible interval for `v(s,t)`.
struct Coordinate {
    band: (f64, f64),
    /// `[0, N^δ/N_s)` when the observed pair is rare.
    cap: Option<f64>,
}

/// Decides whether `x` is `(N, δ, ε)`-typical with respect to `v`.
///
/// Each state is independent. Coordinate `t` of row `s` may sit in the
/// `ε`-band around `p(s,t)`, or, when the observed pair is rare, below the
/// cap `N^δ/N_s`. The union is one interval, so a single program decides
/// feasibility; the band/cap branches are then tried in bitmask order
/// (all-band first) to pick the row closest to the observation.
pub fn is_typical(x: &ObservedSequence, v: &ProductPolyhedron, delta: f64, epsilon: f64) -> Result<Typicality> {
    check_open_interval("epsilon", epsilon, 0.0, 1.0)?;
    check_open_interval("delta", delta, 0.0, f64::INFINITY)?;
    let counts = x.count_transitions();
    let p = counts.observed_transition_matrix().matrix;
    let n = counts.total();
    let threshold = (n as f64).powf(delta);
    let dim = x.num_states();

    let mut rows = Vec::with_capacity(dim * dim);
    let mut weights = Vec::with_capacity(dim);
    for s in 0..dim {
        let ns = counts.row_total(s) as f64;
        let vertices = v.get(s).vertices();
        let found = MARGINS.iter().find_map(|&margin| {
            let coords: Vec<Coordinate> = (0..dim)
                .map(|t| coordinate(ns, p.get(s, t), threshold, epsilon, margin))
                .collect();
            solve_row(vertices, &coords).filter(|w| {
                let row = mixture(vertices, w);
                (0..dim).all(|t| {
                    !is_active(ns, p.get(s, t), row[t], threshold) || relative_deviation(row[t], p.get(s, t)) < epsilon
                })
            })
        });
        let Some(w) = found else {
            return Ok(Typicality::NotTypical { state: s });
        };
        rows.extend(mixture(vertices, &w));
        weights.push(w);
    }

    let v_kernel = TransitionMatrix::from_flat_unchecked(dim, rows);
    let active_pairs = (0..dim)
        .flat_map(|s| (0..dim).map(move |t| (s, t)))
        .filter(|&(s, t)| is_active(counts.row_total(s) as f64, p.get(s, t), v_kernel.get(s, t), threshold))
        .collect();
    Ok(Typicality::Typical(TypicalityCertificate {
        v: v_kernel,
        weights,
        active_pairs,
        n,
        delta,
        epsilon,
    }))
}

fn is_active(ns: f64, p: f64, v: f64, threshold: f64) -> bool {
    ns * p.max(v) >= threshold
}

fn coordinate(ns: f64, p: f64, threshold: f64, eps: f64, margin: f64) -> Coordinate {
    if ns == 0.0 {
        return Coordinate {
            band: (0.0, 1.0),
            cap: None,
        };
    }
    let e = eps - margin;
    let band = ((1.0 - e) * p, (1.0 + e) * p);
    let cap = (ns * p < threshold).then(|| threshold / ns - margin);
    Coordinate { band, cap }
}

fn solve_row(vertices: &[Vec<f64>], coords: &[Coordinate]) -> Option<Vec<f64>> {
    // The cap always reaches above the band's lower end, so band ∪ cap is
    // the single interval [0, max(band.hi, cap)].
    let merged_hi: Vec<f64> = coords
        .iter()
        .map(|c| c.cap.map_or(c.band.1, |cap| cap.max(c.band.1)))
        .collect();
    let merged_lo: Vec<f64> = coords
        .iter()
        .map(|c| if c.cap.is_some() { 0.0 } else { c.band.0 })
        .collect();
    let merged = convex_weights(vertices, &merged_lo, &merged_hi)?;

    let free: Vec<usize> = (0..coords.len()).filter(|&t| coords[t].cap.is_some()).collect();
    for mask in 0u64..(1u64 << free.len()) {
        let mut lo: Vec<f64> = coords.iter().map(|c| c.band.0).collect();
        let mut hi: Vec<f64> = coords.iter().map(|c| c.band.1).collect();
        for (bit, &t) in free.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                lo[t] = 0.0;
                hi[t] = coords[t].cap.expect("free coordinates have a cap");
            }
        }
        if let Some(w) = convex_weights(vertices, &lo, &hi) {
            return Some(w);
        }
    }
    Some(merged)
}
