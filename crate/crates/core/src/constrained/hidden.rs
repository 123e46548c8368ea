use serde::{Deserialize, Serialize};

use super::typical::{relative_deviation, TypicalityCertificate};
use super::{HiddenParams, ProductPolyhedron};
use crate::approximator::{frequent_atoms, most_visited_state, piece_lengths};
use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::feasibility::VALIDATION_TOL;
use crate::partition::{structure_partition, Partition};
use crate::sequence::ObservedSequence;
use crate::subset::StateSet;

/// A state of `Ω = S × (S ∪ {∘})`: the visible state and an optional target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OmegaState {
    pub s: usize,
    /// `None` is `∘`.
    pub target: Option<usize>,
}

impl OmegaState {
    pub fn free(s: usize) -> Self {
        OmegaState { s, target: None }
    }

    /// Index `s (|S|+1) + j`, with `j = |S|` for `∘`.
    pub fn index(self, n: usize) -> usize {
        self.s * (n + 1) + self.target.unwrap_or(n)
    }

    pub fn from_index(i: usize, n: usize) -> Self {
        let (s, j) = (i / (n + 1), i % (n + 1));
        OmegaState {
            s,
            target: (j < n).then_some(j),
        }
    }
}

/// Which rule of the piece kernel applies at an `Ω`-state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Move by `v`; on leaving the atom draw a target by the entry law of the
    /// new state.
    FollowV,
    /// Move by `b` toward the target; clear it on arrival.
    ChaseTarget(usize),
    /// Outside the atom with no target inside it: move by `b` and draw a
    /// target by the entry law of the current state.
    Reenter,
}

/// Everything needed to run the piecewise hidden chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenChainSpec {
    pub x_star: ObservedSequence,
    pub p_star: TransitionMatrix,
    pub partition: Partition,
    /// Frequently visited atoms, in piece order.
    pub atoms: Vec<StateSet>,
    pub lengths: Vec<usize>,
    pub v: TransitionMatrix,
    pub b: TransitionMatrix,
    /// `entry[k][u][t] = P_u(T_{S_k} = T_t)` under the observed kernel of
    /// the extension; zero for `t` outside `S_k`.
    pub entry: Vec<Vec<Vec<f64>>>,
    pub initial: OmegaState,
    pub params: HiddenParams,
}

impl HiddenChainSpec {
    pub fn num_states(&self) -> usize {
        self.v.num_states()
    }

    /// `N = Σ m_k`.
    pub fn total_length(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Piece driving the transition from stage `n`.
    pub fn piece_for_transition(&self, n: usize) -> usize {
        let mut end = 0;
        for (k, &m) in self.lengths.iter().enumerate() {
            end += m;
            if n < end {
                return k;
            }
        }
        self.lengths.len() - 1
    }

    pub fn rule(&self, k: usize, w: OmegaState) -> Rule {
        let atom = self.atoms[k];
        match w.target {
            Some(t) if atom.contains(t) && t != w.s => Rule::ChaseTarget(t),
            _ if atom.contains(w.s) => Rule::FollowV,
            _ => Rule::Reenter,
        }
    }

    /// The law of the next `Ω`-state under piece `k`, as `(state, prob)`
    /// pairs with positive mass.
    pub fn transition_law(&self, k: usize, w: OmegaState) -> Vec<(OmegaState, f64)> {
        let n = self.num_states();
        let atom = self.atoms[k];
        let entry = &self.entry[k];
        let mut out = Vec::new();
        match self.rule(k, w) {
            Rule::FollowV => {
                for s2 in 0..n {
                    let pv = self.v.get(w.s, s2);
                    if pv == 0.0 {
                        continue;
                    }
                    if atom.contains(s2) {
                        out.push((OmegaState::free(s2), pv));
                    } else {
                        for t in atom.iter().filter(|&t| entry[s2][t] > 0.0) {
                            out.push((OmegaState { s: s2, target: Some(t) }, pv * entry[s2][t]));
                        }
                    }
                }
            }
            Rule::ChaseTarget(t) => {
                for s2 in (0..n).filter(|&s2| self.b.get(w.s, s2) > 0.0) {
                    let target = (s2 != t).then_some(t);
                    out.push((OmegaState { s: s2, target }, self.b.get(w.s, s2)));
                }
            }
            Rule::Reenter => {
                for s2 in (0..n).filter(|&s2| self.b.get(w.s, s2) > 0.0) {
                    for t in atom.iter().filter(|&t| entry[w.s][t] > 0.0) {
                        let target = (s2 != t).then_some(t);
                        out.push((OmegaState { s: s2, target }, self.b.get(w.s, s2) * entry[w.s][t]));
                    }
                }
            }
        }
        out
    }

    /// The row of `v` or `b` that drives the visible coordinate at `w`.
    pub fn visible_row(&self, k: usize, w: OmegaState) -> &[f64] {
        match self.rule(k, w) {
            Rule::FollowV => self.v.row(w.s),
            Rule::ChaseTarget(_) | Rule::Reenter => self.b.row(w.s),
        }
    }

    /// The full `|Ω| × |Ω|` kernel of piece `k`.
    pub fn materialize(&self, k: usize) -> TransitionMatrix {
        let n = self.num_states();
        let size = n * (n + 1);
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            for (w2, p) in self.transition_law(k, OmegaState::from_index(i, n)) {
                data[i * size + w2.index(n)] += p;
            }
        }
        TransitionMatrix::from_flat_unchecked(size, data)
    }
}

/// Checks that the certificate kernel stays `3ε`-close to the observed kernel
/// of the extension on every pair frequent at level `N_*^{δ'}`.
pub fn lemma7_check(
    x_star: &ObservedSequence,
    cert: &TypicalityCertificate,
    delta_prime: f64,
) -> std::result::Result<(), String> {
    let counts = x_star.count_transitions();
    let p = counts.observed_transition_matrix().matrix;
    let threshold = (x_star.transitions() as f64).powf(delta_prime);
    let n = x_star.num_states();
    for s in 0..n {
        let ns = counts.row_total(s) as f64;
        for t in 0..n {
            let (ps, vs) = (p.get(s, t), cert.v.get(s, t));
            if ns * ps.max(vs) >= threshold && relative_deviation(vs, ps) > 3.0 * cert.epsilon {
                return Err(format!(
                    "pair ({s},{t}): |1 - v/p| = {} exceeds 3 eps = {}",
                    relative_deviation(vs, ps),
                    3.0 * cert.epsilon
                ));
            }
        }
    }
    Ok(())
}

/// Builds the piecewise hidden chain approximating a typical sequence.
///
/// `params.xi` sets the partition threshold `N^ξ`, `params.delta` the
/// frequency cut `N^{1-δ}` for atoms, and `params.delta_prime` the level at
/// which the certificate must carry over to the extension.
pub fn build_hidden(
    x: &ObservedSequence,
    v: &ProductPolyhedron,
    b: &TransitionMatrix,
    params: HiddenParams,
    cert: &TypicalityCertificate,
) -> Result<HiddenChainSpec> {
    if !b.is_irreducible() {
        return Err(Error::ReducibleChain);
    }
    if !v.contains(b, VALIDATION_TOL) {
        return Err(Error::InvalidPolyhedron("b is not in V".into()));
    }
    if !v.contains(&cert.v, VALIDATION_TOL) {
        return Err(Error::InvalidPolyhedron("certificate kernel is not in V".into()));
    }
    let x_star = x.periodicize_exhaustify();
    lemma7_check(&x_star, cert, params.delta_prime).map_err(Error::CertificateMismatch)?;

    let n = x.transitions() as f64;
    let partition = structure_partition(&x_star, n.powf(params.xi))?;
    let atoms = frequent_atoms(&x_star, &partition, params.delta)?;
    let mut lengths = piece_lengths(&x_star, &atoms);
    // The last piece absorbs the remainder up to the original length.
    let head: usize = lengths[..atoms.len() - 1].iter().sum();
    *lengths.last_mut().expect("nonempty") = x
        .transitions()
        .checked_sub(head)
        .ok_or_else(|| Error::DegenerateInput("frequent atoms outlast the original sequence".into()))?;

    let p_star = x_star.count_transitions().observed_transition_matrix().matrix;
    let entry = atoms
        .iter()
        .map(|&atom| {
            let laws = p_star.entry_laws(atom)?;
            Ok(laws
                .into_iter()
                .map(|law| {
                    let mut full = vec![0.0; x.num_states()];
                    for (t, p) in atom.iter().zip(law) {
                        full[t] = p;
                    }
                    full
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;

    Ok(HiddenChainSpec {
        initial: OmegaState::free(most_visited_state(&x_star, atoms[0])),
        x_star,
        p_star,
        partition,
        atoms,
        lengths,
        v: cert.v.clone(),
        b: b.clone(),
        entry,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::super::is_typical;
    use super::*;
    use crate::approximator::two_block_sequence;

    fn two_block_spec() -> HiddenChainSpec {
        let x = two_block_sequence(1000);
        let p = x.count_transitions().observed_transition_matrix().matrix;
        let v = ProductPolyhedron::singletons(x.alphabet().clone(), &p).unwrap();
        let cert = is_typical(&x, &v, 0.3, 0.1).unwrap().certificate().cloned().unwrap();
        let params = HiddenParams {
            epsilon: 0.1,
            delta: 0.1,
            delta_prime: 0.3,
            xi: 0.4,
        };
        build_hidden(&x, &v, &p, params, &cert).unwrap()
    }

    #[test]
    fn omega_indexing() {
        for i in 0..12 {
            assert_eq!(OmegaState::from_index(i, 3).index(3), i);
        }
        assert_eq!(OmegaState::free(1).index(3), 7);
    }

    #[test]
    fn singleton_atoms_trace() {
        let spec = two_block_spec();
        assert_eq!(spec.atoms.len(), 2);
        assert_eq!(spec.total_length(), 2000);
        let k = 0;
        let s = spec.atoms[k].first().unwrap();
        let other = 1 - s;
        // at (s, ∘): stay with v(s,s), otherwise exit with target s
        let law = spec.transition_law(k, OmegaState::free(s));
        assert_eq!(law.len(), 2);
        assert!(law.contains(&(OmegaState::free(s), spec.v.get(s, s))));
        assert!(law.contains(&(
            OmegaState {
                s: other,
                target: Some(s)
            },
            spec.v.get(s, other)
        )));
        // at (other, s): run b until s
        let law = spec.transition_law(
            k,
            OmegaState {
                s: other,
                target: Some(s),
            },
        );
        assert!(law.contains(&(OmegaState::free(s), spec.b.get(other, s))));
        assert!(law.contains(&(
            OmegaState {
                s: other,
                target: Some(s)
            },
            spec.b.get(other, other)
        )));
    }

    #[test]
    fn support_and_marginals() {
        let spec = two_block_spec();
        let n = spec.num_states();
        for k in 0..spec.atoms.len() {
            let pi = spec.materialize(k);
            let atom = spec.atoms[k];
            for i in 0..n * (n + 1) {
                let w = OmegaState::from_index(i, n);
                let mut marginal = vec![0.0; n];
                for j in 0..n * (n + 1) {
                    let p = pi.get(i, j);
                    if p == 0.0 {
                        continue;
                    }
                    let w2 = OmegaState::from_index(j, n);
                    let inside =
                        w2.target.is_some_and(|t| atom.contains(t)) || (w2.target.is_none() && atom.contains(w2.s));
                    assert!(inside, "{w:?} -> {w2:?}");
                    marginal[w2.s] += p;
                }
                assert_eq!(marginal.as_slice(), spec.visible_row(k, w));
            }
        }
    }

    #[test]
    fn certificate_mismatch_is_reported() {
        let x = two_block_sequence(1000);
        let p = x.count_transitions().observed_transition_matrix().matrix;
        let v = ProductPolyhedron::singletons(x.alphabet().clone(), &p).unwrap();
        let mut cert = is_typical(&x, &v, 0.3, 0.1).unwrap().certificate().cloned().unwrap();
        cert.epsilon = 1e-9;
        let bogus = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        cert.v = bogus.clone();
        let v2 = ProductPolyhedron::new(
            x.alphabet().clone(),
            (0..2)
                .map(|s| super::super::Polyhedron::new(vec![p.row(s).to_vec(), bogus.row(s).to_vec()]).unwrap())
                .collect(),
        )
        .unwrap();
        let params = HiddenParams {
            epsilon: 0.1,
            delta: 0.1,
            delta_prime: 0.3,
            xi: 0.4,
        };
        assert!(matches!(
            build_hidden(&x, &v2, &p, params, &cert),
            Err(Error::CertificateMismatch(_))
        ));
    }
}
