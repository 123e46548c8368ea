//! Subsets of the state space as bitmasks.
//!
//! Everything that enumerates subsets is exponential in the alphabet size, so
//! the bitmask width (64) is far above any practical limit. Subset
//! enumeration is only sensible up to roughly 16 states.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Hard cap on the alphabet size supported by [`StateSet`].
pub const MAX_STATES: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSet(u64);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn from_bits(bits: u64) -> Self {
        StateSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_STATES, "at most {MAX_STATES} states are supported");
        if n == 64 {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(s: usize) -> Self {
        assert!(s < MAX_STATES);
        StateSet(1u64 << s)
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(states: I) -> Self {
        states.into_iter().fold(StateSet::EMPTY, |acc, s| acc.with(s))
    }

    pub fn with(self, s: usize) -> Self {
        StateSet(self.0 | StateSet::singleton(s).0)
    }

    pub fn without(self, s: usize) -> Self {
        StateSet(self.0 & !StateSet::singleton(s).0)
    }

    pub fn contains(self, s: usize) -> bool {
        s < MAX_STATES && self.0 & (1u64 << s) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Complement relative to `{0, .., n-1}`.
    pub fn complement(self, n: usize) -> Self {
        StateSet(!self.0 & StateSet::full(n).0)
    }

    pub fn union(self, other: Self) -> Self {
        StateSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        StateSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        StateSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(s)
            }
        })
    }

    /// Nonempty proper subsets of `self`, in increasing bitmask order.
    pub fn proper_subsets(self) -> impl Iterator<Item = StateSet> {
        let full = self.0;
        // Walks submasks from the smallest upward: next = ((sub | !full) + 1) & full.
        let mut sub: u64 = 0;
        std::iter::from_fn(move || {
            sub = (sub | !full).wrapping_add(1) & full;
            if sub == 0 || sub == full {
                None
            } else {
                Some(StateSet(sub))
            }
        })
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for StateSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        StateSet::from_states(iter)
    }
}
