//! Structure partitions: atoms whose runs are few while the runs of every
//! proper subset of an atom are many.

use serde::{Deserialize, Serialize};

use crate::error::{check_open_interval, Result};
use crate::sequence::ObservedSequence;
use crate::subset::StateSet;

/// Ordered disjoint cover of the state space by nonempty atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub atoms: Vec<StateSet>,
    pub a: f64,
}

impl Partition {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Index of the atom containing `s`.
    pub fn atom_of(&self, s: usize) -> Option<usize> {
        self.atoms.iter().position(|c| c.contains(s))
    }

    /// `(a+1)^K`, the run-count ceiling for atoms.
    pub fn run_ceiling(&self) -> f64 {
        (self.a + 1.0).powi(self.atoms.len() as i32)
    }
}

/// Greedy refinement from `{S}`: while some atom `C` has a nonempty proper
/// subset `D` with `R_D <= a R_C`, replace `C` by `D, C∖D` in place.
///
/// The violating pair is the lowest-index atom, then the `D` with least
/// `R_D`, then the least bitmask.
pub fn structure_partition(x: &ObservedSequence, a: f64) -> Result<Partition> {
    check_open_interval("a", a, 0.0, f64::INFINITY)?;
    let mut atoms = vec![StateSet::full(x.num_states())];
    while let Some((i, d)) = first_violation(x, &atoms, a) {
        let c = atoms[i];
        atoms.splice(i..=i, [d, c.difference(d)]);
    }
    Ok(Partition { atoms, a })
}

fn first_violation(x: &ObservedSequence, atoms: &[StateSet], a: f64) -> Option<(usize, StateSet)> {
    atoms.iter().enumerate().find_map(|(i, &c)| {
        let limit = a * x.run_count(c) as f64;
        c.proper_subsets()
            .map(|d| (x.run_count(d), d))
            .filter(|&(r, _)| r as f64 <= limit)
            .min_by_key(|&(r, d)| (r, d.bits()))
            .map(|(_, d)| (i, d))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub p1_ok: bool,
    pub p2_ok: bool,
    /// `R_C` for each atom, in atom order.
    pub run_counts: Vec<u64>,
    pub run_ceiling: f64,
    /// First atom whose run count exceeds the ceiling.
    pub p1_witness: Option<StateSet>,
    /// First `(C, D)` with `R_D <= a R_C`.
    pub p2_witness: Option<(StateSet, StateSet)>,
    pub covers: bool,
}

/// Checks both partition properties by enumerating every proper subset of
/// every atom.
pub fn verify_partition(x: &ObservedSequence, partition: &Partition) -> PartitionReport {
    let n = x.num_states();
    let mut union = StateSet::EMPTY;
    let mut disjoint = true;
    for &c in &partition.atoms {
        disjoint &= union.intersection(c).is_empty() && !c.is_empty();
        union = union.union(c);
    }
    let ceiling = partition.run_ceiling();
    let run_counts: Vec<u64> = partition.atoms.iter().map(|&c| x.run_count(c)).collect();
    let p1_witness = partition
        .atoms
        .iter()
        .zip(&run_counts)
        .find(|&(_, &r)| r as f64 > ceiling)
        .map(|(&c, _)| c);
    let p2_witness = partition.atoms.iter().zip(&run_counts).find_map(|(&c, &rc)| {
        c.proper_subsets()
            .find(|&d| x.run_count(d) as f64 <= partition.a * rc as f64)
            .map(|d| (c, d))
    });
    PartitionReport {
        p1_ok: p1_witness.is_none(),
        p2_ok: p2_witness.is_none(),
        run_counts,
        run_ceiling: ceiling,
        p1_witness,
        p2_witness,
        covers: disjoint && union == StateSet::full(n),
    }
}
