//! Observed sequences and the statistics read off them: transition counts,
//! occupancy, the observed transition matrix and run counts.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::subset::{StateSet, MAX_STATES};

/// Ordered list of distinct state tokens.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = Alphabet {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for sym in symbols {
            let sym = sym.into();
            if alphabet.index.contains_key(&sym) {
                return Err(Error::InvalidSequence(format!("duplicate symbol `{sym}`")));
            }
            alphabet.push(sym)?;
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidSequence("empty alphabet".into()));
        }
        Ok(alphabet)
    }

    /// Alphabet `0, 1, .., n-1`.
    pub fn numbered(n: usize) -> Self {
        Alphabet::new((0..n).map(|i| i.to_string())).expect("distinct numbered symbols")
    }

    fn push(&mut self, sym: String) -> Result<usize> {
        if self.symbols.len() >= MAX_STATES {
            return Err(Error::InvalidSequence(format!(
                "alphabet larger than {MAX_STATES} states"
            )));
        }
        let i = self.symbols.len();
        self.index.insert(sym.clone(), i);
        self.symbols.push(sym);
        Ok(i)
    }

    fn index_or_insert(&mut self, sym: &str) -> Result<usize> {
        match self.index.get(sym) {
            Some(&i) => Ok(i),
            None => self.push(sym.to_string()),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, sym: &str) -> Option<usize> {
        self.index.get(sym).copied()
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Parses a comma-separated token list such as `a,b`.
    pub fn parse_subset(&self, list: &str) -> Result<StateSet> {
        let mut set = StateSet::EMPTY;
        for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let i = self.index_of(tok).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown state `{tok}`"),
            })?;
            set = set.with(i);
        }
        Ok(set)
    }

    pub fn format_subset(&self, set: StateSet) -> String {
        let toks: Vec<&str> = set.iter().map(|s| self.symbol(s)).collect();
        format!("{{{}}}", toks.join(","))
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

/// A finite sequence `x_0, .., x_N` over an alphabet, `N >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedSequence {
    alphabet: Alphabet,
    entries: Vec<usize>,
}

impl ObservedSequence {
    pub fn new(alphabet: Alphabet, entries: Vec<usize>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidSequence(format!(
                "need at least two observations, got {}",
                entries.len()
            )));
        }
        if let Some(&bad) = entries.iter().find(|&&e| e >= alphabet.len()) {
            return Err(Error::InvalidSequence(format!(
                "entry {bad} outside alphabet of size {}",
                alphabet.len()
            )));
        }
        Ok(ObservedSequence { alphabet, entries })
    }

    /// Builds a sequence from tokens; the alphabet is first-appearance order.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut alphabet = Alphabet {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        let mut entries = Vec::new();
        for tok in tokens {
            entries.push(alphabet.index_or_insert(tok.as_ref())?);
        }
        ObservedSequence::new(alphabet, entries)
    }

    /// Builds a sequence over a declared alphabet. Tokens missing from the
    /// declaration are appended to it in first-appearance order.
    pub fn with_alphabet<I, S>(alphabet: &Alphabet, tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut alphabet = alphabet.clone();
        let mut entries = Vec::new();
        for tok in tokens {
            entries.push(alphabet.index_or_insert(tok.as_ref())?);
        }
        ObservedSequence::new(alphabet, entries)
    }

    /// Parses the sequence file format: whitespace separated tokens, an
    /// optional `#alphabet: tok1 tok2 ..` header, and `#` comment lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<Alphabet> = None;
        let mut tokens = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix("#alphabet:") {
                if declared.is_some() {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: "alphabet declared twice".into(),
                    });
                }
                declared = Some(Alphabet::new(rest.split_whitespace()).map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?);
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            tokens.extend(trimmed.split_whitespace());
        }
        match declared {
            Some(alphabet) => ObservedSequence::with_alphabet(&alphabet, tokens),
            None => ObservedSequence::from_tokens(tokens),
        }
    }

    /// Renders the sequence in the file format, alphabet header included.
    pub fn to_text(&self) -> String {
        let mut out = format!("#alphabet: {}\n", self.alphabet.symbols.join(" "));
        let toks: Vec<&str> = self.entries.iter().map(|&e| self.alphabet.symbol(e)).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
        out
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn num_states(&self) -> usize {
        self.alphabet.len()
    }

    /// `N`, the number of transitions.
    pub fn transitions(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn first(&self) -> usize {
        self.entries[0]
    }

    pub fn last(&self) -> usize {
        *self.entries.last().expect("nonempty")
    }

    pub fn count_transitions(&self) -> TransitionCounts {
        let n = self.num_states();
        let mut counts = vec![0u64; n * n];
        for w in self.entries.windows(2) {
            counts[w[0] * n + w[1]] += 1;
        }
        TransitionCounts::from_flat(n, counts)
    }

    /// Number of `C`-runs: `N_{C̄,C} + 1[x_0 ∈ C]`.
    pub fn run_count(&self, c: StateSet) -> u64 {
        let entering = self
            .entries
            .windows(2)
            .filter(|w| !c.contains(w[0]) && c.contains(w[1]))
            .count() as u64;
        entering + u64::from(c.contains(self.first()))
    }

    /// Same quantity from the exit side: `N_{C,C̄} + 1[x_N ∈ C]`.
    pub fn run_count_by_exits(&self, c: StateSet) -> u64 {
        let leaving = self
            .entries
            .windows(2)
            .filter(|w| c.contains(w[0]) && !c.contains(w[1]))
            .count() as u64;
        leaving + u64::from(c.contains(self.last()))
    }

    /// Every state appears among `x_0, .., x_{N-1}`.
    pub fn is_exhaustive(&self) -> bool {
        let seen: StateSet = self.entries[..self.transitions()].iter().copied().collect();
        seen == StateSet::full(self.num_states())
    }

    /// `x_N == x_0`.
    pub fn is_periodic(&self) -> bool {
        self.first() == self.last()
    }

    /// Extends the sequence to an exhaustive periodic one by appending the
    /// unvisited states (alphabet order) and then `x_0`. Sequences that are
    /// already exhaustive and periodic are returned unchanged.
    pub fn periodicize_exhaustify(&self) -> ObservedSequence {
        if self.is_exhaustive() && self.is_periodic() {
            return self.clone();
        }
        let visited: StateSet = self.entries.iter().copied().collect();
        let mut entries = self.entries.clone();
        entries.extend(visited.complement(self.num_states()).iter());
        entries.push(self.first());
        ObservedSequence {
            alphabet: self.alphabet.clone(),
            entries,
        }
    }
}

/// Matrix of one-step transition counts `N_{s,t}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionCounts {
    n: usize,
    counts: Vec<u64>,
    row_totals: Vec<u64>,
    total: u64,
}

impl TransitionCounts {
    fn from_flat(n: usize, counts: Vec<u64>) -> Self {
        let row_totals: Vec<u64> = counts.chunks(n).map(|r| r.iter().sum()).collect();
        let total = row_totals.iter().sum();
        TransitionCounts {
            n,
            counts,
            row_totals,
            total,
        }
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, t: usize) -> u64 {
        self.counts[s * self.n + t]
    }

    /// `N_s`, visits to `s` excluding the last stage.
    pub fn row_total(&self, s: usize) -> u64 {
        self.row_totals[s]
    }

    /// `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `N_{A,B}`.
    pub fn between(&self, a: StateSet, b: StateSet) -> u64 {
        a.iter().map(|s| b.iter().map(|t| self.get(s, t)).sum::<u64>()).sum()
    }

    /// `N_A`.
    pub fn visits(&self, a: StateSet) -> u64 {
        a.iter().map(|s| self.row_totals[s]).sum()
    }

    pub fn occupancy(&self) -> OccupancyMeasure {
        let total = self.total as f64;
        OccupancyMeasure {
            weights: self.row_totals.iter().map(|&c| c as f64 / total).collect(),
        }
    }

    /// The observed transition matrix. Rows of states never left (`N_s = 0`)
    /// are uniform and flagged as unvisited.
    pub fn observed_transition_matrix(&self) -> ObservedTransitions {
        let n = self.n;
        let mut rows = Vec::with_capacity(n * n);
        let mut unvisited = Vec::new();
        for s in 0..n {
            let total = self.row_totals[s];
            if total == 0 {
                unvisited.push(s);
                rows.extend(std::iter::repeat_n(1.0 / n as f64, n));
            } else {
                rows.extend((0..n).map(|t| self.get(s, t) as f64 / total as f64));
            }
        }
        ObservedTransitions {
            matrix: TransitionMatrix::from_flat_unchecked(n, rows),
            unvisited,
        }
    }
}

/// Observed transition matrix together with the rows that carry no data.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedTransitions {
    pub matrix: TransitionMatrix,
    pub unvisited: Vec<usize>,
}

/// A probability vector over the states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub weights: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn get(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn mass(&self, set: StateSet) -> f64 {
        set.iter().map(|s| self.weights[s]).sum()
    }

    /// `μ(·|C)` restricted to the members of `set` (in increasing order).
    pub fn conditional(&self, set: StateSet) -> Vec<f64> {
        let m = self.mass(set);
        set.iter().map(|s| self.weights[s] / m).collect()
    }

    /// Empirical occupancy of the given stages of a realization.
    pub fn empirical(path: &[usize], num_states: usize) -> OccupancyMeasure {
        let mut weights = vec![0.0; num_states];
        for &s in path {
            weights[s] += 1.0;
        }
        let len = path.len() as f64;
        weights.iter_mut().for_each(|w| *w /= len);
        OccupancyMeasure { weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(s: &str) -> ObservedSequence {
        ObservedSequence::parse(s).unwrap()
    }

    #[test]
    fn counts_on_fixtures() {
        let f1 = seq("a a a a b b b b a");
        let c = f1.count_transitions();
        assert_eq!((c.get(0, 0), c.get(0, 1), c.get(1, 1), c.get(1, 0)), (3, 1, 3, 1));
        assert_eq!(c.total(), 8);

        let f2 = seq("0 1 0 1 0 1");
        let c = f2.count_transitions();
        assert_eq!((c.get(0, 1), c.get(1, 0), c.total()), (3, 2, 5));

        let c = seq("a b").count_transitions();
        assert_eq!((c.get(0, 1), c.get(0, 0), c.get(1, 0), c.get(1, 1)), (1, 0, 0, 0));
        assert_eq!(c.total(), 1);
    }

    #[test]
    fn occupancy_on_fixtures() {
        assert_eq!(
            seq("a a a a b b b b a").count_transitions().occupancy().weights,
            vec![0.5, 0.5]
        );
        assert_eq!(
            seq("0 1 0 1 0 1").count_transitions().occupancy().weights,
            vec![0.6, 0.4]
        );
        assert_eq!(seq("a b").count_transitions().occupancy().weights, vec![1.0, 0.0]);
    }

    #[test]
    fn observed_matrix_and_unvisited_rows() {
        let obs = seq("a a a a b b b b a")
            .count_transitions()
            .observed_transition_matrix();
        assert_eq!(obs.matrix.row(0), &[0.75, 0.25]);
        assert_eq!(obs.matrix.row(1), &[0.25, 0.75]);
        assert!(obs.unvisited.is_empty());

        let obs = seq("0 1 0 1 0 1").count_transitions().observed_transition_matrix();
        assert_eq!(obs.matrix.row(0), &[0.0, 1.0]);
        assert_eq!(obs.matrix.row(1), &[1.0, 0.0]);

        let obs = seq("#alphabet: a b c\na b a")
            .count_transitions()
            .observed_transition_matrix();
        assert_eq!(obs.unvisited, vec![2]);
        for &w in obs.matrix.row(2) {
            assert_abs_diff_eq!(w, 1.0 / 3.0);
        }
    }

    #[test]
    fn run_counts() {
        let f2 = seq("0 1 0 1 0 1");
        assert_eq!(f2.run_count(StateSet::singleton(0)), 3);
        let f1 = seq("a a a a b b b b a");
        assert_eq!(f1.run_count(StateSet::singleton(0)), 2);
        assert_eq!(f1.run_count(StateSet::singleton(1)), 1);
        assert_eq!(f1.run_count(StateSet::full(2)), 1);
        assert_eq!(f1.run_count(StateSet::EMPTY), 0);
    }

    #[test]
    fn exhaustive_and_periodic() {
        let f1 = seq("a a a a b b b b a");
        assert_eq!((f1.is_exhaustive(), f1.is_periodic()), (true, true));
        let f2 = seq("0 1 0 1 0 1");
        assert_eq!((f2.is_exhaustive(), f2.is_periodic()), (true, false));
        let x = seq("#alphabet: a b\na a a");
        assert_eq!((x.is_exhaustive(), x.is_periodic()), (false, true));
    }

    #[test]
    fn periodicize_fixtures() {
        let f1 = seq("a a a a b b b b a");
        assert_eq!(f1.periodicize_exhaustify(), f1);

        let f2 = seq("0 1 0 1 0 1");
        assert_eq!(f2.periodicize_exhaustify().entries(), &[0, 1, 0, 1, 0, 1, 0]);

        let x = seq("#alphabet: a b c\na b a");
        let star = x.periodicize_exhaustify();
        let toks: Vec<&str> = star.entries().iter().map(|&e| star.alphabet().symbol(e)).collect();
        assert_eq!(toks, vec!["a", "b", "a", "c", "a"]);
    }

    #[test]
    fn parse_header_and_errors() {
        let x = seq("#alphabet: b a\n# a comment\na a\nb");
        assert_eq!(x.alphabet().symbols(), &["b", "a"]);
        assert_eq!(x.entries(), &[1, 1, 0]);
        // undeclared tokens are appended
        let x = seq("#alphabet: a\na z a");
        assert_eq!(x.alphabet().symbols(), &["a", "z"]);
        assert!(ObservedSequence::parse("a").is_err());
        assert!(ObservedSequence::parse("#alphabet: a a\na a").is_err());
        let round = ObservedSequence::parse(&x.to_text()).unwrap();
        assert_eq!(round, x);
    }

    #[test]
    fn subset_parsing() {
        let x = seq("a b c a");
        assert_eq!(
            x.alphabet().parse_subset("a, c").unwrap(),
            StateSet::from_states([0, 2])
        );
        assert!(x.alphabet().parse_subset("q").is_err());
        assert_eq!(x.alphabet().format_subset(StateSet::from_states([0, 2])), "{a,c}");
    }
}
