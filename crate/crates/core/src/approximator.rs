//! The piecewise homogeneous Markov chain that approximates an arbitrary
//! sequence, and the constants that make the approximation provable.
//!
//! Construction: extend the sequence to an exhaustive periodic one, split
//! the states with the structure partition at threshold `a = N^{4δ}`, keep
//! the atoms visited at least `N^{1-δ}` times, and run the observed chain
//! watched on each kept atom for as many stages as the atom was visited.

use serde::{Deserialize, Serialize};

use crate::chain::TransitionMatrix;
use crate::error::{check_open_interval, Error, Result};
use crate::partition::{structure_partition, Partition};
use crate::report::fmt_f64;
use crate::sequence::{Alphabet, ObservedSequence};
use crate::subset::StateSet;

/// One named inequality evaluated at a given `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Check {
    pub(crate) fn new(name: &str, lhs: f64, rhs: f64, holds: bool) -> Self {
        Check {
            name: name.to_string(),
            holds,
            lhs,
            rhs,
        }
    }

    pub(crate) fn ge(name: &str, lhs: f64, rhs: f64) -> Self {
        Check::new(name, lhs, rhs, lhs >= rhs)
    }

    pub(crate) fn gt(name: &str, lhs: f64, rhs: f64) -> Self {
        Check::new(name, lhs, rhs, lhs > rhs)
    }

    pub(crate) fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Check::new(name, lhs, rhs, lhs <= rhs)
    }
}

/// Smallest `N` at which a monotone family of checks holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MinimalN {
    Finite(u64),
    /// Beyond `2^63`; the value is `log10` of the real threshold.
    Astronomical {
        log10: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicConstants {
    pub num_states: usize,
    pub n: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
    /// `N^{4δ}`.
    pub a: f64,
    /// (N1)..(N6) in order.
    pub checks: Vec<Check>,
    /// Least `N_0` with (N1) and (N2).
    pub min_n0: MinimalN,
}

impl BasicConstants {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn basic_checks(s: usize, n: f64, eps: f64, delta: f64, zeta: f64) -> Vec<Check> {
    let sf = s as f64;
    let two_s = 2f64.powi(s as i32);
    vec![
        Check::gt("N1", n.powf(1.0 - (4.0 * sf + 1.0) * delta), two_s / eps),
        Check::gt("N2", n.powf(2.0 * delta - zeta), 4.0 * 17.0 * sf.powi(4) / (eps * eps)),
        Check::le(
            "N3",
            (n.powf(4.0 * delta) + 1.0).powi(s as i32) * n.powf(delta - 1.0),
            eps / (two_s + 1.0),
        ),
        Check::gt("N4", n.powf(delta), (sf * sf / eps).max(2.0 * sf + 2.0)),
        Check::ge("N5", n.powf(2.0 * delta), 8.0 / eps),
        Check::ge("N6", n.powf(4.0 * delta), (1.0 / eps).max(10.0 * sf)),
    ]
}

/// Evaluates (N1)..(N6) at `N` and finds the least `N_0` satisfying (N1)
/// and (N2).
pub fn check_constants_basic(num_states: usize, n: u64, epsilon: f64, delta: f64, zeta: f64) -> Result<BasicConstants> {
    check_open_interval("epsilon", epsilon, 0.0, 0.5)?;
    check_open_interval("delta", delta, 0.0, 1.0 / (2.0 * (4.0 * num_states as f64 + 1.0)))?;
    check_open_interval("zeta", zeta, 0.0, 2.0 * delta)?;
    let checks = basic_checks(num_states, n as f64, epsilon, delta, zeta);
    Ok(BasicConstants {
        num_states,
        n,
        epsilon,
        delta,
        zeta,
        a: (n as f64).powf(4.0 * delta),
        checks,
        min_n0: minimal_n0(num_states, epsilon, delta, zeta),
    })
}

fn minimal_n0(s: usize, eps: f64, delta: f64, zeta: f64) -> MinimalN {
    let sf = s as f64;
    let holds = |n: u64| {
        let c = basic_checks(s, n as f64, eps, delta, zeta);
        c[0].holds && c[1].holds
    };
    // Both are of the form N^e > b with e > 0.
    let log_n1 = (2f64.powi(s as i32) / eps).log10() / (1.0 - (4.0 * sf + 1.0) * delta);
    let log_n2 = (68.0 * sf.powi(4) / (eps * eps)).log10() / (2.0 * delta - zeta);
    let log10 = log_n1.max(log_n2).max(0.0);
    if log10 >= 63.0 * 2f64.log10() - 0.5 {
        return MinimalN::Astronomical { log10 };
    }
    let mut n = (10f64.powf(log10).floor() as u64).max(1);
    while n > 1 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    MinimalN::Finite(n)
}

/// One homogeneous piece: `length` transitions driven by `kernel`, which
/// keeps the chain inside `atom`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub atom: StateSet,
    pub length: usize,
    pub kernel: TransitionMatrix,
}

/// Piecewise homogeneous Markov chain over an alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseChain {
    pub alphabet: Alphabet,
    pub initial: Vec<f64>,
    pub pieces: Vec<Piece>,
}

impl PiecewiseChain {
    /// `N = Σ m_k`.
    pub fn total_length(&self) -> usize {
        self.pieces.iter().map(|p| p.length).sum()
    }

    /// First stage of each piece.
    pub fn boundaries(&self) -> Vec<usize> {
        self.pieces
            .iter()
            .scan(0, |acc, p| {
                let start = *acc;
                *acc += p.length;
                Some(start)
            })
            .collect()
    }

    /// Piece whose kernel drives the transition from stage `n` to `n + 1`:
    /// the piece that contains stage `n + 1`, the last piece beyond `N - 1`.
    pub fn piece_for_transition(&self, n: usize) -> usize {
        let mut end = 0;
        for (k, p) in self.pieces.iter().enumerate() {
            end += p.length;
            if n + 1 < end {
                return k;
            }
        }
        self.pieces.len() - 1
    }

    /// A single piece running `kernel` for `length` transitions from the
    /// point mass at `start`.
    pub fn homogeneous(alphabet: Alphabet, kernel: TransitionMatrix, length: usize, start: usize) -> Self {
        let n = kernel.num_states();
        let mut initial = vec![0.0; n];
        initial[start] = 1.0;
        PiecewiseChain {
            alphabet,
            initial,
            pieces: vec![Piece {
                atom: StateSet::full(n),
                length,
                kernel,
            }],
        }
    }

    pub fn to_text(&self) -> String {
        let fmt_row = |r: &[f64]| r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ");
        let mut out = String::from("#piecewise-chain\n");
        out.push_str(&format!("alphabet: {}\n", self.alphabet.symbols().join(" ")));
        out.push_str(&format!("initial: {}\n", fmt_row(&self.initial)));
        for p in &self.pieces {
            let atom: Vec<&str> = p.atom.iter().map(|s| self.alphabet.symbol(s)).collect();
            out.push_str(&format!("piece\natom: {}\nlength: {}\n", atom.join(" "), p.length));
            for s in 0..p.kernel.num_states() {
                out.push_str(&format!("row: {}\n", fmt_row(p.kernel.row(s))));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut initial = None;
        let mut pieces = Vec::new();
        let mut current: Option<(StateSet, usize, Vec<Vec<f64>>)> = None;

        let floats = |line: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("`{t}`: {e}"),
                    })
                })
                .collect()
        };
        let finish = |cur: Option<(StateSet, usize, Vec<Vec<f64>>)>, pieces: &mut Vec<Piece>| -> Result<()> {
            if let Some((atom, length, rows)) = cur {
                pieces.push(Piece {
                    atom,
                    length,
                    kernel: TransitionMatrix::new(rows)?,
                });
            }
            Ok(())
        };

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed == "piece" {
                finish(current.take(), &mut pieces)?;
                current = Some((StateSet::EMPTY, 0, Vec::new()));
                continue;
            }
            let (key, value) = trimmed.split_once(':').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `key: value`, got `{trimmed}`"),
            })?;
            let value = value.trim();
            let need_alpha = || {
                alphabet.clone().ok_or(Error::Parse {
                    line,
                    msg: "alphabet must come first".into(),
                })
            };
            match (key, current.as_mut()) {
                ("alphabet", None) => alphabet = Some(Alphabet::new(value.split_whitespace())?),
                ("initial", None) => initial = Some(floats(line, value)?),
                ("atom", Some(cur)) => {
                    let alpha = need_alpha()?;
                    let mut atom = StateSet::EMPTY;
                    for tok in value.split_whitespace() {
                        let s = alpha.index_of(tok).ok_or_else(|| Error::Parse {
                            line,
                            msg: format!("unknown state `{tok}`"),
                        })?;
                        atom = atom.with(s);
                    }
                    cur.0 = atom;
                }
                ("length", Some(cur)) => {
                    cur.1 = value.parse().map_err(|e| Error::Parse {
                        line,
                        msg: format!("length: {e}"),
                    })?;
                }
                ("row", Some(cur)) => cur.2.push(floats(line, value)?),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unexpected key `{key}`"),
                    })
                }
            }
        }
        finish(current.take(), &mut pieces)?;

        let alphabet = alphabet.ok_or(Error::Parse {
            line: 1,
            msg: "missing alphabet".into(),
        })?;
        let initial = initial.ok_or(Error::Parse {
            line: 1,
            msg: "missing initial distribution".into(),
        })?;
        if pieces.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "no pieces".into(),
            });
        }
        if initial.len() != alphabet.len() || pieces.iter().any(|p| p.kernel.num_states() != alphabet.len()) {
            return Err(Error::Parse {
                line: 1,
                msg: "dimensions do not match the alphabet".into(),
            });
        }
        Ok(PiecewiseChain {
            alphabet,
            initial,
            pieces,
        })
    }
}

/// Everything produced by [`build_basic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicApproximation {
    /// The exhaustive periodic extension of the input.
    pub x_star: Vec<usize>,
    /// Partition in construction order, all atoms.
    pub partition: Partition,
    /// Atoms visited at least `N^{1-δ}` times, in piece order.
    pub frequent_atoms: Vec<StateSet>,
    pub chain: PiecewiseChain,
    /// Observed transition matrix of the extension.
    pub p_star: TransitionMatrix,
}

impl BasicApproximation {
    pub fn x_star_sequence(&self) -> ObservedSequence {
        ObservedSequence::new(self.chain.alphabet.clone(), self.x_star.clone()).expect("valid extension")
    }
}

/// Frequently visited atoms (`N_{S_k} >= N^{1-δ}`), most visited last, the
/// others by decreasing visits, ties by least member.
pub(crate) fn frequent_atoms(x_star: &ObservedSequence, partition: &Partition, delta: f64) -> Result<Vec<StateSet>> {
    let counts = x_star.count_transitions();
    let n = x_star.transitions() as f64;
    let threshold = n.powf(1.0 - delta);
    let mut k0: Vec<StateSet> = partition
        .atoms
        .iter()
        .copied()
        .filter(|&c| counts.visits(c) as f64 >= threshold)
        .collect();
    if k0.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "no atom is visited N^(1-delta) = {threshold:.3} times; \
             this cannot happen once N >= |S|^(1/delta) = {:.3}",
            (x_star.num_states() as f64).powf(1.0 / delta)
        )));
    }
    k0.sort_by_key(|&c| (std::cmp::Reverse(counts.visits(c)), c.first()));
    k0.rotate_left(1);
    Ok(k0)
}

/// Piece lengths: visits of each atom, the last piece taking the remainder.
pub(crate) fn piece_lengths(x_star: &ObservedSequence, atoms: &[StateSet]) -> Vec<usize> {
    let counts = x_star.count_transitions();
    let n = x_star.transitions();
    let mut lengths: Vec<usize> = atoms.iter().map(|&c| counts.visits(c) as usize).collect();
    let head: usize = lengths[..atoms.len() - 1].iter().sum();
    *lengths.last_mut().expect("nonempty") = n - head;
    lengths
}

/// State of `atom` with the largest occupancy, ties by least index.
pub(crate) fn most_visited_state(x_star: &ObservedSequence, atom: StateSet) -> usize {
    let counts = x_star.count_transitions();
    atom.iter()
        .max_by_key(|&s| (counts.row_total(s), std::cmp::Reverse(s)))
        .expect("atoms are nonempty")
}

/// Builds the approximating piecewise chain of a sequence.
pub fn build_basic(x: &ObservedSequence, delta: f64) -> Result<BasicApproximation> {
    check_open_interval("delta", delta, 0.0, 1.0)?;
    let x_star = x.periodicize_exhaustify();
    let n = x_star.transitions() as f64;
    let partition = structure_partition(&x_star, n.powf(4.0 * delta))?;
    let p_star = x_star.count_transitions().observed_transition_matrix().matrix;
    let atoms = frequent_atoms(&x_star, &partition, delta)?;
    let lengths = piece_lengths(&x_star, &atoms);
    let num = x_star.num_states();

    let mut pieces = Vec::with_capacity(atoms.len());
    for (&atom, &length) in atoms.iter().zip(&lengths) {
        let watched = p_star.watched_chain(atom)?;
        let members: Vec<usize> = atom.iter().collect();
        let mut data = vec![0.0; num * num];
        for s in 0..num {
            let row = &mut data[s * num..(s + 1) * num];
            match members.iter().position(|&m| m == s) {
                Some(i) => {
                    for (j, &t) in members.iter().enumerate() {
                        row[t] = watched.get(i, j);
                    }
                }
                None => members.iter().for_each(|&t| row[t] = 1.0 / members.len() as f64),
            }
        }
        pieces.push(Piece {
            atom,
            length,
            kernel: TransitionMatrix::from_flat_unchecked(num, data),
        });
    }

    let mut initial = vec![0.0; num];
    initial[most_visited_state(&x_star, atoms[0])] = 1.0;
    Ok(BasicApproximation {
        x_star: x_star.entries().to_vec(),
        partition,
        frequent_atoms: atoms,
        chain: PiecewiseChain {
            alphabet: x_star.alphabet().clone(),
            initial,
            pieces,
        },
        p_star,
    })
}

/// Mixing time of the observed chain watched on one atom against `N^{1-3δ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomMixing {
    pub atom: StateSet,
    /// `None` for singleton atoms.
    pub gamma: Option<f64>,
    pub bound: f64,
    pub pass: Option<bool>,
}

pub fn verify_watched_mixing(x_star: &ObservedSequence, partition: &Partition, delta: f64) -> Result<Vec<AtomMixing>> {
    let p = x_star.count_transitions().observed_transition_matrix().matrix;
    let bound = (x_star.transitions() as f64).powf(1.0 - 3.0 * delta);
    partition
        .atoms
        .iter()
        .map(|&atom| {
            if atom.len() < 2 {
                return Ok(AtomMixing {
                    atom,
                    gamma: None,
                    bound,
                    pass: None,
                });
            }
            let gamma = p.watched_chain(atom)?.gamma_mixing_constant()?;
            Ok(AtomMixing {
                atom,
                gamma: Some(gamma),
                bound,
                pass: Some(gamma <= bound),
            })
        })
        .collect()
}

/// `a^M b^M a`, the sequence on which a homogeneous chain fails.
pub fn two_block_sequence(m: usize) -> ObservedSequence {
    let mut entries = vec![0; m];
    entries.extend(std::iter::repeat_n(1, m));
    entries.push(0);
    ObservedSequence::new(Alphabet::new(["a", "b"]).expect("distinct"), entries).expect("m >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_block_family_gives_two_frozen_pieces() {
        let m = 1000;
        let x = two_block_sequence(m);
        let b = build_basic(&x, 0.1).unwrap();
        assert_eq!(b.chain.pieces.len(), 2);
        assert_eq!(b.chain.total_length(), 2 * m);
        for p in &b.chain.pieces {
            assert_eq!(p.atom.len(), 1);
            assert_eq!(p.length, m);
            let s = p.atom.first().unwrap();
            assert_eq!(p.kernel.row(s)[s], 1.0);
        }
        // most visited atom last; tie on visits broken by least member
        assert_eq!(b.frequent_atoms, vec![StateSet::singleton(1), StateSet::singleton(0)]);
        assert_eq!(b.chain.initial, vec![0.0, 1.0]);
    }

    #[test]
    fn one_atom_partition_is_the_naive_chain() {
        let x = ObservedSequence::parse("0 1 0 1 0 1 0").unwrap();
        // a = 6^{4δ} < 3 keeps {S}
        let b = build_basic(&x, 0.1).unwrap();
        assert_eq!(b.chain.pieces.len(), 1);
        assert_eq!(b.chain.pieces[0].kernel, b.p_star);
        assert_eq!(b.chain.pieces[0].length, 6);
    }

    #[test]
    fn transition_to_piece_map() {
        let b = build_basic(&two_block_sequence(10), 0.3).unwrap();
        let c = &b.chain;
        assert_eq!(c.boundaries(), vec![0, 10]);
        assert_eq!(c.piece_for_transition(0), 0);
        assert_eq!(c.piece_for_transition(8), 0);
        assert_eq!(c.piece_for_transition(9), 1);
        assert_eq!(c.piece_for_transition(19), 1);
    }

    #[test]
    fn text_round_trip() {
        let b = build_basic(&ObservedSequence::parse("a b c a a b c c a b a").unwrap(), 0.05).unwrap();
        let again = PiecewiseChain::parse(&b.chain.to_text()).unwrap();
        assert_eq!(again, b.chain);
        assert!(PiecewiseChain::parse("alphabet: a\n").is_err());
    }

    #[test]
    fn basic_constants_fixture() {
        let c = check_constants_basic(2, 10, 0.4, 0.05, 0.05).unwrap();
        assert!(!c.checks[1].holds);
        assert_eq!(c.checks.len(), 6);
        assert!(check_constants_basic(2, 10, 0.6, 0.05, 0.05).is_err());
        assert!(check_constants_basic(2, 10, 0.4, 0.06, 0.05).is_err());
        assert!(check_constants_basic(2, 10, 0.4, 0.05, 0.1).is_err());
    }

    #[test]
    fn minimal_n0_is_tight() {
        let c = check_constants_basic(1, 2, 0.45, 0.09, 0.01).unwrap();
        let MinimalN::Finite(n0) = c.min_n0 else {
            panic!("expected a finite threshold, got {:?}", c.min_n0)
        };
        let at = |n| check_constants_basic(1, n, 0.45, 0.09, 0.01).unwrap();
        assert!(at(n0).checks[..2].iter().all(|c| c.holds));
        assert!(!at(n0 - 1).checks[..2].iter().all(|c| c.holds));
        assert!(matches!(
            check_constants_basic(3, 2, 0.1, 0.01, 0.01).unwrap().min_n0,
            MinimalN::Astronomical { .. }
        ));
    }

    #[test]
    fn singleton_atoms_are_skipped_in_mixing_report() {
        let x = two_block_sequence(50);
        let b = build_basic(&x, 0.3).unwrap();
        let r = verify_watched_mixing(&b.x_star_sequence(), &b.partition, 0.3).unwrap();
        assert!(r.iter().all(|m| m.gamma.is_none() && m.pass.is_none()));
    }
}
