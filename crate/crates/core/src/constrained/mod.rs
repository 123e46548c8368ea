//! Transition constraints given by polyhedra `V(s)` in vertex form, the
//! typicality test, the general constants and the hidden-chain builder.

mod constants;
mod hidden;
mod typical;

pub use constants::{
    bernoulli_tail_constant, check_constants_general, combinatorial_l, prop4_l, typicality_checks, GeneralConstants,
    HiddenParams,
};
pub use hidden::{build_hidden, lemma7_check, HiddenChainSpec, OmegaState, Rule};
pub use typical::{is_typical, Typicality, TypicalityCertificate};

use serde::{Deserialize, Serialize};

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::feasibility::{convex_weights, mixture};
use crate::sequence::Alphabet;
use crate::subset::StateSet;

const VERTEX_SUM_TOL: f64 = 1e-12;

/// Convex hull of finitely many distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    vertices: Vec<Vec<f64>>,
}

impl Polyhedron {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(dim) = vertices.first().map(Vec::len) else {
            return Err(Error::InvalidPolyhedron("no vertices".into()));
        };
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::InvalidPolyhedron("vertices of different lengths".into()));
            }
            if v.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::InvalidPolyhedron(format!("vertex {v:?} has a negative entry")));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > VERTEX_SUM_TOL {
                return Err(Error::InvalidPolyhedron(format!("vertex {v:?} sums to {sum}")));
            }
        }
        Ok(Polyhedron { vertices })
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        Polyhedron::new(vec![point])
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// Average of the vertices.
    pub fn centroid(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        mixture(&self.vertices, &vec![1.0 / k; self.vertices.len()])
    }

    /// Convex weights reproducing `d` within `tol` in every coordinate.
    pub fn membership(&self, d: &[f64], tol: f64) -> Option<Vec<f64>> {
        let lo: Vec<f64> = d.iter().map(|x| x - tol).collect();
        let hi: Vec<f64> = d.iter().map(|x| x + tol).collect();
        convex_weights(&self.vertices, &lo, &hi)
    }
}

/// One polyhedron per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPolyhedron {
    pub alphabet: Alphabet,
    pub per_state: Vec<Polyhedron>,
}

impl ProductPolyhedron {
    pub fn new(alphabet: Alphabet, per_state: Vec<Polyhedron>) -> Result<Self> {
        let n = alphabet.len();
        if per_state.len() != n || per_state.iter().any(|p| p.dim() != n) {
            return Err(Error::InvalidPolyhedron(format!(
                "need one polyhedron of dimension {n} per state"
            )));
        }
        Ok(ProductPolyhedron { alphabet, per_state })
    }

    /// `V(s) = {k(s,·)}` for every `s`.
    pub fn singletons(alphabet: Alphabet, kernel: &TransitionMatrix) -> Result<Self> {
        let per_state = (0..kernel.num_states())
            .map(|s| Polyhedron::singleton(kernel.row(s).to_vec()))
            .collect::<Result<_>>()?;
        ProductPolyhedron::new(alphabet, per_state)
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn get(&self, s: usize) -> &Polyhedron {
        &self.per_state[s]
    }

    /// True iff every row of `k` lies in the matching polyhedron.
    pub fn contains(&self, k: &TransitionMatrix, tol: f64) -> bool {
        (0..self.num_states()).all(|s| self.per_state[s].membership(k.row(s), tol).is_some())
    }

    /// Parses the polyhedra file format:
    ///
    /// ```text
    /// #alphabet: a b
    /// state a
    /// 0.6 0.4
    /// 0.9 0.1
    /// state b
    /// 0.5 0.5
    /// ```
    ///
    /// Without a header the `state` lines define the alphabet in order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<Alphabet> = None;
        let mut blocks: Vec<(String, usize, Vec<Vec<f64>>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if let Some(rest) = trimmed.strip_prefix("#alphabet:") {
                declared = Some(Alphabet::new(rest.split_whitespace())?);
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(tok) = trimmed.strip_prefix("state ") {
                blocks.push((tok.trim().to_string(), line, Vec::new()));
                continue;
            }
            let row = trimmed
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("`{t}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            match blocks.last_mut() {
                Some(b) => b.2.push(row),
                None => {
                    return Err(Error::Parse {
                        line,
                        msg: "vertex row before any `state` line".into(),
                    })
                }
            }
        }
        let alphabet = match declared {
            Some(a) => a,
            None => Alphabet::new(blocks.iter().map(|b| b.0.clone()))?,
        };
        let mut per_state: Vec<Option<Polyhedron>> = vec![None; alphabet.len()];
        for (tok, line, rows) in blocks {
            let s = alphabet.index_of(&tok).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown state `{tok}`"),
            })?;
            if per_state[s].is_some() {
                return Err(Error::Parse {
                    line,
                    msg: format!("state `{tok}` given twice"),
                });
            }
            per_state[s] = Some(Polyhedron::new(rows).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?);
        }
        let per_state = per_state
            .into_iter()
            .enumerate()
            .map(|(s, p)| {
                p.ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: format!("no polyhedron for state `{}`", alphabet.symbol(s)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProductPolyhedron::new(alphabet, per_state)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#alphabet: {}\n", self.alphabet.symbols().join(" "));
        for (s, p) in self.per_state.iter().enumerate() {
            out.push_str(&format!("state {}\n", self.alphabet.symbol(s)));
            for v in p.vertices() {
                let row: Vec<String> = v.iter().map(|x| crate::report::fmt_f64(*x)).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// The kernel whose row `s` is the vertex centroid of `V(s)`, when it is
/// irreducible.
///
/// Every element of `V` has support inside the centroid's support, so a
/// reducible centroid means no irreducible kernel exists in `V`.
pub fn find_irreducible_b(v: &ProductPolyhedron) -> Option<TransitionMatrix> {
    let n = v.num_states();
    let data: Vec<f64> = v.per_state.iter().flat_map(Polyhedron::centroid).collect();
    let b = TransitionMatrix::from_flat_unchecked(n, data);
    b.is_irreducible().then_some(b)
}

/// `B = max_{s,t} E_s[T_t]` under `b`.
pub fn compute_b(b: &TransitionMatrix) -> Result<f64> {
    if !b.is_irreducible() {
        return Err(Error::ReducibleChain);
    }
    let mut max: f64 = 0.0;
    for t in 0..b.num_states() {
        max = b.hitting_times(StateSet::singleton(t)).into_iter().fold(max, f64::max);
    }
    Ok(max)
}

/// `v` on the rows of `atom`, `p_star` elsewhere.
pub fn q_k_kernel(p_star: &TransitionMatrix, atom: StateSet, v: &TransitionMatrix) -> TransitionMatrix {
    let n = p_star.num_states();
    let data = (0..n)
        .flat_map(|s| if atom.contains(s) { v.row(s) } else { p_star.row(s) }.to_vec())
        .collect();
    TransitionMatrix::from_flat_unchecked(n, data)
}
