//! Exact analysis of finite Markov chains: invariant measures, hitting and
//! return times, absorption probabilities, watched chains, exit-time mixing
//! constants and the relative-closeness predicate between two kernels.
//!
//! Every quantity is obtained from a dense direct solve. Expected hitting
//! times use `+∞` for targets that are not reached almost surely.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{Alphabet, OccupancyMeasure};
use crate::subset::StateSet;

const ROW_SUM_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;

/// Row-stochastic matrix over `n` states, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!("matrix with {n} rows is not square")));
        }
        TransitionMatrix::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {n}x{n} entries, got {}",
                data.len()
            )));
        }
        let m = TransitionMatrix { n, data };
        for s in 0..n {
            let row = m.row(s);
            if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return Err(Error::InvalidMatrix(format!(
                    "row {s} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!("row {s} sums to {sum}")));
            }
        }
        Ok(m)
    }

    pub(crate) fn from_flat_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        TransitionMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        TransitionMatrix { n, data }
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[s * self.n + t]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `p(s, A)`.
    pub fn mass(&self, s: usize, set: StateSet) -> f64 {
        set.iter().map(|t| self.get(s, t)).sum()
    }

    /// Sup-norm distance between row `s` of `self` and row `s` of `other`.
    pub fn row_distance(&self, other: &TransitionMatrix, s: usize) -> f64 {
        self.row(s)
            .iter()
            .zip(other.row(s))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// States reachable from `start` in zero or more steps, expanding only
    /// through states of `through`.
    fn reachable(&self, start: StateSet, through: StateSet) -> StateSet {
        let mut seen = start;
        let mut queue: VecDeque<usize> = start.iter().collect();
        while let Some(u) = queue.pop_front() {
            if !through.contains(u) {
                continue;
            }
            for v in 0..self.n {
                if self.get(u, v) > 0.0 && !seen.contains(v) {
                    seen = seen.with(v);
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// States from which `target` is reachable, expanding only through
    /// states of `through`.
    fn coreachable(&self, target: StateSet, through: StateSet) -> StateSet {
        let mut seen = target;
        let mut queue: VecDeque<usize> = target.iter().collect();
        while let Some(v) = queue.pop_front() {
            for u in through.iter() {
                if self.get(u, v) > 0.0 && !seen.contains(u) {
                    seen = seen.with(u);
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// True iff the support digraph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        self.is_irreducible_on(StateSet::full(self.n))
    }

    /// True iff `class` is closed and the chain restricted to it is strongly
    /// connected.
    pub fn is_irreducible_on(&self, class: StateSet) -> bool {
        let Some(root) = class.first() else {
            return false;
        };
        let all = StateSet::full(self.n);
        let closed = class.iter().all(|s| self.mass(s, class.complement(self.n)) == 0.0);
        closed
            && self.reachable(StateSet::singleton(root), all) == class
            && self.coreachable(StateSet::singleton(root), class) == class
    }

    fn require_irreducible(&self) -> Result<()> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(Error::ReducibleChain)
        }
    }

    /// The unique invariant probability of an irreducible chain.
    pub fn invariant_measure(&self) -> Result<OccupancyMeasure> {
        self.require_irreducible()?;
        self.solve_invariant(StateSet::full(self.n))
    }

    /// Invariant probability of the closed irreducible class `class`, zero
    /// elsewhere.
    pub fn invariant_measure_on(&self, class: StateSet) -> Result<OccupancyMeasure> {
        if !self.is_irreducible_on(class) {
            return Err(Error::ReducibleChain);
        }
        self.solve_invariant(class)
    }

    fn solve_invariant(&self, class: StateSet) -> Result<OccupancyMeasure> {
        let idx: Vec<usize> = class.iter().collect();
        let k = idx.len();
        // μ (P - I) = 0 transposed, with the last equation replaced by Σμ = 1.
        let mut a = DMatrix::<f64>::zeros(k, k);
        for (i, &s) in idx.iter().enumerate() {
            for (j, &t) in idx.iter().enumerate() {
                a[(j, i)] = self.get(s, t) - if s == t { 1.0 } else { 0.0 };
            }
        }
        for i in 0..k {
            a[(k - 1, i)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(k);
        b[k - 1] = 1.0;
        let x = solve(a, b)?;
        let mut weights = vec![0.0; self.n];
        for (i, &s) in idx.iter().enumerate() {
            weights[s] = x[i].max(0.0);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(OccupancyMeasure { weights })
    }

    /// `E_s[T_A]` for every starting state `s`, with `T_A = min{n ≥ 0 : z_n ∈ A}`.
    pub fn hitting_times(&self, target: StateSet) -> Vec<f64> {
        assert!(!target.is_empty(), "hitting time of the empty set");
        let all = StateSet::full(self.n);
        let outside = target.complement(self.n);
        let hopeless = self.coreachable(target, all).complement(self.n);
        // Starting points that may wander into a hopeless state before hitting
        // the target have infinite expectation.
        let infinite = self.coreachable(hopeless, outside);
        let finite = outside.difference(infinite);

        let mut times = vec![0.0; self.n];
        for s in infinite.iter() {
            times[s] = f64::INFINITY;
        }
        if finite.is_empty() {
            return times;
        }
        let idx: Vec<usize> = finite.iter().collect();
        let k = idx.len();
        let a = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - self.get(idx[i], idx[j]));
        let b = DVector::from_element(k, 1.0);
        let h = solve(a, b).expect("hitting-time system is nonsingular on the finite set");
        for (i, &s) in idx.iter().enumerate() {
            times[s] = h[i];
        }
        times
    }

    pub fn expected_hitting_time(&self, s: usize, target: StateSet) -> f64 {
        self.hitting_times(target)[s]
    }

    /// `E_s[T_s^+] = 1 + Σ_u p(s,u) E_u[T_s]`.
    pub fn expected_return_time(&self, s: usize) -> Result<f64> {
        self.require_irreducible()?;
        let h = self.hitting_times(StateSet::singleton(s));
        Ok(1.0 + (0..self.n).map(|u| self.get(s, u) * h[u]).sum::<f64>())
    }

    /// `γ* = max_{s,t} E_s[T_t^+]`; the chain is γ-mixing iff `γ ≥ γ*`.
    pub fn gamma_mixing_constant(&self) -> Result<f64> {
        self.require_irreducible()?;
        let mut gamma: f64 = 0.0;
        for t in 0..self.n {
            let h = self.hitting_times(StateSet::singleton(t));
            let ret = 1.0 + (0..self.n).map(|u| self.get(t, u) * h[u]).sum::<f64>();
            gamma = gamma.max(ret);
            gamma = h.iter().copied().fold(gamma, f64::max);
        }
        Ok(gamma)
    }

    /// Absorption probabilities into the states of `absorbing`.
    ///
    /// Row `u` is the law of `z_{T_A}` started from `u` (a point mass for
    /// `u ∈ A`); rows may be sub-stochastic where `A` is missed with positive
    /// probability.
    pub fn absorption(&self, absorbing: StateSet) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut h = vec![vec![0.0; n]; n];
        for u in absorbing.iter() {
            h[u][u] = 1.0;
        }
        let outside = absorbing.complement(n);
        let live = self.coreachable(absorbing, outside).intersection(outside);
        let idx: Vec<usize> = live.iter().collect();
        let k = idx.len();
        if k == 0 {
            return h;
        }
        let a = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - self.get(idx[i], idx[j]));
        let targets: Vec<usize> = absorbing.iter().collect();
        let b = DMatrix::from_fn(k, targets.len(), |i, j| self.get(idx[i], targets[j]));
        let x = solve_many(a, b).expect("absorption system is nonsingular on live states");
        for (i, &u) in idx.iter().enumerate() {
            for (j, &t) in targets.iter().enumerate() {
                h[u][t] = x[(i, j)].clamp(0.0, 1.0);
            }
        }
        h
    }

    /// `P_s(T_{C̄} < T_t)` for `s, t ∈ C`.
    pub fn hit_before_prob(&self, s: usize, t: usize, c: StateSet) -> f64 {
        let comp = c.complement(self.n);
        if s == t || comp.is_empty() {
            return 0.0;
        }
        let h = self.absorption(comp.with(t));
        comp.iter().map(|u| h[s][u]).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Entry law `t ↦ P_u(T_C = T_t)` over the members of `C` (increasing
    /// order).
    pub fn hit_equality_distribution(&self, u: usize, c: StateSet) -> Result<Vec<f64>> {
        let h = self.absorption(c);
        entry_law(&h, u, c)
    }

    /// Entry laws into `C` from every state, indexed by starting state.
    pub fn entry_laws(&self, c: StateSet) -> Result<Vec<Vec<f64>>> {
        let h = self.absorption(c);
        (0..self.n).map(|u| entry_law(&h, u, c)).collect()
    }

    /// The chain watched on `C`, as a kernel over the members of `C` in
    /// increasing order.
    pub fn watched_chain(&self, c: StateSet) -> Result<TransitionMatrix> {
        self.require_irreducible()?;
        if c.is_empty() {
            return Err(Error::DegenerateInput("watched chain on the empty set".into()));
        }
        let h = self.absorption(c);
        let members: Vec<usize> = c.iter().collect();
        let outside = c.complement(self.n);
        let k = members.len();
        let mut data = Vec::with_capacity(k * k);
        for &s in &members {
            for &t in &members {
                let via: f64 = outside.iter().map(|u| self.get(s, u) * h[u][t]).sum();
                data.push(self.get(s, t) + via);
            }
        }
        let mut watched = TransitionMatrix::from_flat_unchecked(k, data);
        watched.renormalize_rows();
        Ok(watched)
    }

    fn renormalize_rows(&mut self) {
        let n = self.n;
        for row in self.data.chunks_mut(n) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }

    /// `λ_p(C) = max_{s∈C} E_s[T_{C̄}]`, infinite when `C = S`.
    pub fn exit_time_max(&self, c: StateSet) -> f64 {
        let comp = c.complement(self.n);
        if comp.is_empty() {
            return f64::INFINITY;
        }
        let h = self.hitting_times(comp);
        c.iter().map(|s| h[s]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_{s∈C} E_s[T_{C̄}]`.
    pub fn exit_time_min(&self, c: StateSet) -> f64 {
        let comp = c.complement(self.n);
        if comp.is_empty() {
            return f64::INFINITY;
        }
        let h = self.hitting_times(comp);
        c.iter().map(|s| h[s]).fold(f64::INFINITY, f64::min)
    }

    /// `ρ_p(C) = max_{∅≠D⊂C} min_{s∈D} E_s[T_{D̄}]`, zero when `|C| < 2`.
    pub fn rho(&self, c: StateSet) -> f64 {
        c.proper_subsets().map(|d| self.exit_time_min(d)).fold(0.0, f64::max)
    }

    /// `K_p(C)`: mean length of a visit to `C` under `μ`.
    pub fn visit_length(&self, mu: &OccupancyMeasure, c: StateSet) -> f64 {
        let comp = c.complement(self.n);
        let num = mu.mass(c);
        let den: f64 = c.iter().map(|s| mu.get(s) * self.mass(s, comp)).sum();
        if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    }

    /// `ζ^C_p = min_{∅≠D⊂C} Σ_{s∈D} μ(s) p(s, D̄)`, infinite when `|C| < 2`.
    pub fn conductance(&self, mu: &OccupancyMeasure, c: StateSet) -> f64 {
        c.proper_subsets()
            .map(|d| {
                let comp = d.complement(self.n);
                d.iter().map(|s| mu.get(s) * self.mass(s, comp)).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mixing_stats(&self, c: StateSet) -> Result<MixingStats> {
        let mu = self.invariant_measure()?;
        Ok(MixingStats {
            lambda: self.exit_time_max(c),
            rho: self.rho(c),
            visit_len: self.visit_length(&mu, c),
            conductance: self.conductance(&mu, c),
        })
    }

    /// Checks whether `other` is `(β, ε)`-close to `self` on `C`.
    pub fn closeness_check(
        &self,
        other: &TransitionMatrix,
        c: StateSet,
        beta: f64,
        eps: f64,
    ) -> Result<ClosenessReport> {
        if c.len() < 2 {
            return Err(Error::DegenerateInput("closeness needs |C| >= 2".into()));
        }
        if other.n != self.n {
            return Err(Error::InvalidMatrix("kernels over different state spaces".into()));
        }
        let mu = self.invariant_measure()?;
        let threshold = beta * self.conductance(&mu, c);
        let rows_outside: Vec<usize> = c
            .complement(self.n)
            .iter()
            .filter(|&s| self.row(s) != other.row(s))
            .collect();
        let mut checked = Vec::new();
        let mut violations = Vec::new();
        for s in c.iter() {
            for t in c.iter() {
                let (p1, p2) = (self.get(s, t), other.get(s, t));
                if mu.get(s) * p1.max(p2) < threshold {
                    continue;
                }
                let deviation = if p1 > 0.0 { (1.0 - p2 / p1).abs() } else { f64::INFINITY };
                let pair = CheckedPair { s, t, deviation };
                if deviation > eps {
                    violations.push(pair);
                }
                checked.push(pair);
            }
        }
        Ok(ClosenessReport {
            close: rows_outside.is_empty() && violations.is_empty(),
            threshold,
            rows_differing_outside: rows_outside,
            checked_pairs: checked,
            violations,
        })
    }
}

fn entry_law(h: &[Vec<f64>], u: usize, c: StateSet) -> Result<Vec<f64>> {
    let dist: Vec<f64> = c.iter().map(|t| h[u][t]).collect();
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unreachable(u));
    }
    Ok(dist.into_iter().map(|v| v / total).collect())
}

/// Exit-time constants of a set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingStats {
    pub lambda: f64,
    pub rho: f64,
    pub visit_len: f64,
    pub conductance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckedPair {
    pub s: usize,
    pub t: usize,
    /// `|1 - p2(s,t)/p1(s,t)|`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub close: bool,
    /// `β ζ^C_{p1}`.
    pub threshold: f64,
    pub rows_differing_outside: Vec<usize>,
    pub checked_pairs: Vec<CheckedPair>,
    pub violations: Vec<CheckedPair>,
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular system".into()))?;
    check_residual(&a, &x, &b)?;
    Ok(x)
}

fn solve_many(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular system".into()))?;
    let residual = (&a * &x - &b).amax();
    let scale = 1.0 + a.amax() * x.amax() * a.ncols() as f64;
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!("residual {residual:e} too large")));
    }
    Ok(x)
}

fn check_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    let residual = (a * x - b).amax();
    let scale = 1.0 + a.amax() * x.amax() * a.ncols() as f64;
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!("residual {residual:e} too large")));
    }
    Ok(())
}

/// Parses a matrix file: one row per line, whitespace separated reals, with
/// an optional `#alphabet:` header naming the states.
pub fn parse_matrix(text: &str) -> Result<(Alphabet, TransitionMatrix)> {
    let mut alphabet = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("#alphabet:") {
            alphabet = Some(Alphabet::new(rest.split_whitespace())?);
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("`{tok}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let matrix = TransitionMatrix::new(rows)?;
    let alphabet = alphabet.unwrap_or_else(|| Alphabet::numbered(matrix.num_states()));
    if alphabet.len() != matrix.num_states() {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "alphabet has {} states but the matrix has {}",
                alphabet.len(),
                matrix.num_states()
            ),
        });
    }
    Ok((alphabet, matrix))
}

/// Formats a matrix in the file format, floats with 17 significant digits.
pub fn format_matrix(alphabet: &Alphabet, m: &TransitionMatrix) -> String {
    let mut out = format!("#alphabet: {}\n", alphabet.symbols().join(" "));
    for s in 0..m.num_states() {
        let row: Vec<String> = m.row(s).iter().map(|v| crate::report::fmt_f64(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
