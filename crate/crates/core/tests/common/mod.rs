//! Independent oracles for the integration tests: exact rational Markov
//! chain algebra and direct scans of sequences.
#![allow(dead_code, clippy::needless_range_loop)]

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use seqchain::TransitionMatrix;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("finite rational")
}

pub fn members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&s| mask >> s & 1 == 1).collect()
}

pub fn full(n: usize) -> u64 {
    (1u64 << n) - 1
}

/// Gauss-Jordan on `a x = b` with several right-hand sides.
pub fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Vec<Q>>) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut().chain(b[col].iter_mut()) {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
            for c in 0..b[r].len() {
                let d = &f * &b[col][c];
                b[r][c] -= d;
            }
        }
    }
    Some(b)
}

/// A transition matrix with rational entries.
#[derive(Clone, Debug)]
pub struct ExactChain {
    pub p: Vec<Vec<Q>>,
}

impl ExactChain {
    /// Rows proportional to nonnegative integer weights.
    pub fn from_weights(w: &[Vec<u32>]) -> Self {
        let p = w
            .iter()
            .map(|row| {
                let total: u32 = row.iter().sum();
                row.iter().map(|&x| q(x.into(), total.into())).collect()
            })
            .collect();
        ExactChain { p }
    }

    /// Observed kernel of a sequence, rows of unvisited states left at zero.
    pub fn from_path(path: &[usize], n: usize) -> Self {
        let mut counts = vec![vec![0u32; n]; n];
        for w in path.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        let p = counts
            .iter()
            .map(|row| {
                let total: u32 = row.iter().sum();
                row.iter()
                    .map(|&x| {
                        if total == 0 {
                            Q::zero()
                        } else {
                            q(x.into(), total.into())
                        }
                    })
                    .collect()
            })
            .collect();
        ExactChain { p }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn to_matrix(&self) -> TransitionMatrix {
        TransitionMatrix::new(self.p.iter().map(|r| r.iter().map(to_f64).collect()).collect()).unwrap()
    }

    fn reach(&self, from: usize) -> u64 {
        let mut seen = 1u64 << from;
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for t in 0..self.n() {
                if self.p[s][t].is_positive() && seen >> t & 1 == 0 {
                    seen |= 1 << t;
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        (0..self.n()).all(|s| self.reach(s) == full(self.n()))
    }

    /// `E_s[T_A]` for all `s`; the system must be nonsingular, which holds
    /// whenever `A` is reachable from every state.
    pub fn hitting(&self, target: u64) -> Vec<Q> {
        let n = self.n();
        let rest: Vec<usize> = (0..n).filter(|&s| target >> s & 1 == 0).collect();
        let mut h = vec![Q::zero(); n];
        if rest.is_empty() {
            return h;
        }
        let a = rest
            .iter()
            .map(|&i| {
                rest.iter()
                    .map(|&j| if i == j { Q::one() } else { Q::zero() } - &self.p[i][j])
                    .collect()
            })
            .collect();
        let b = rest.iter().map(|_| vec![Q::one()]).collect();
        let x = solve(a, b).expect("target reachable from everywhere");
        for (i, &s) in rest.iter().enumerate() {
            h[s] = x[i][0].clone();
        }
        h
    }

    /// `h[u][t] = P_u(z_{T_A} = t)`, with every state able to reach `A`.
    pub fn absorption(&self, target: u64) -> Vec<Vec<Q>> {
        let n = self.n();
        let rest: Vec<usize> = (0..n).filter(|&s| target >> s & 1 == 0).collect();
        let mut h = vec![vec![Q::zero(); n]; n];
        for t in members(target, n) {
            h[t][t] = Q::one();
        }
        if rest.is_empty() {
            return h;
        }
        let a = rest
            .iter()
            .map(|&i| {
                rest.iter()
                    .map(|&j| if i == j { Q::one() } else { Q::zero() } - &self.p[i][j])
                    .collect()
            })
            .collect();
        let b = rest
            .iter()
            .map(|&i| {
                (0..n)
                    .map(|t| {
                        if target >> t & 1 == 1 {
                            self.p[i][t].clone()
                        } else {
                            Q::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let x = solve(a, b).expect("target reachable from everywhere");
        for (i, &u) in rest.iter().enumerate() {
            h[u] = x[i].clone();
        }
        h
    }

    pub fn invariant(&self) -> Vec<Q> {
        let n = self.n();
        // μ (I - P) = 0 with the last equation replaced by Σ μ = 1
        let mut a: Vec<Vec<Q>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| if i == j { Q::one() } else { Q::zero() } - &self.p[i][j])
                    .collect()
            })
            .collect();
        a[n - 1] = vec![Q::one(); n];
        let mut b = vec![vec![Q::zero()]; n];
        b[n - 1][0] = Q::one();
        solve(a, b)
            .expect("irreducible")
            .into_iter()
            .map(|r| r[0].clone())
            .collect()
    }

    /// `E_s[T_s^+]`.
    pub fn return_time(&self, s: usize) -> Q {
        let h = self.hitting(1 << s);
        (0..self.n()).fold(Q::one(), |acc, u| acc + &self.p[s][u] * &h[u])
    }

    /// `max_{s,t} E_s[T_t^+]`.
    pub fn gamma(&self) -> Q {
        let mut best = Q::zero();
        for t in 0..self.n() {
            let h = self.hitting(1 << t);
            for v in h.iter().chain(std::iter::once(&self.return_time(t))) {
                if *v > best {
                    best = v.clone();
                }
            }
        }
        best
    }
}

/// Random integer weights, zero with probability `zero_prob`, regenerated
/// until the chain is irreducible.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize, max_weight: u32, zero_prob: f64) -> ExactChain {
    loop {
        let w: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < zero_prob {
                            0
                        } else {
                            rng.random_range(1..=max_weight)
                        }
                    })
                    .collect()
            })
            .collect();
        if w.iter().any(|r| r.iter().sum::<u32>() == 0) {
            continue;
        }
        let c = ExactChain::from_weights(&w);
        if c.is_irreducible() {
            return c;
        }
    }
}

/// Number of maximal runs of `path` inside `mask`.
pub fn runs(path: &[usize], mask: u64) -> u64 {
    let inside = |s: usize| mask >> s & 1 == 1;
    (0..path.len())
        .filter(|&i| inside(path[i]) && (i == 0 || !inside(path[i - 1])))
        .count() as u64
}

/// Transitions from `a` to `b` along `path`.
pub fn transitions_between(path: &[usize], a: u64, b: u64) -> u64 {
    path.windows(2)
        .filter(|w| a >> w[0] & 1 == 1 && b >> w[1] & 1 == 1)
        .count() as u64
}

/// Categorical draw from a row by inverse CDF.
pub fn draw<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (t, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return t;
        }
    }
    row.iter().rposition(|&p| p > 0.0).expect("row has mass")
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
