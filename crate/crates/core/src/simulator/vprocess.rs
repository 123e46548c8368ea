use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_trials, sample_categorical, wilson_interval, RNG_DESCRIPTION};
use crate::constrained::{is_typical, ProductPolyhedron};
use crate::error::{Error, Result};
use crate::feasibility::mixture;
use crate::report::Report;
use crate::sequence::ObservedSequence;

/// How a V-process picks the vertex of `V(z_n)` that drives its next step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VProcessPolicy {
    /// Vertex drawn from fixed weights per state.
    Fixed(Vec<Vec<f64>>),
    /// Fresh uniform weights on the simplex at every step.
    Iid,
    /// The `j`-th visit to `s` uses vertex `j mod |V*(s)|`.
    Cycling,
}

impl VProcessPolicy {
    pub fn validate(&self, v: &ProductPolyhedron) -> Result<()> {
        let VProcessPolicy::Fixed(weights) = self else {
            return Ok(());
        };
        let ok = weights.len() == v.num_states()
            && weights.iter().enumerate().all(|(s, w)| {
                w.len() == v.get(s).vertices().len()
                    && w.iter().all(|&x| x >= 0.0)
                    && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            });
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPolyhedron(
                "policy weights must be a distribution over each V*(s)".into(),
            ))
        }
    }
}

/// A V-process path with the vertex chosen at every step and the counts
/// `N_{s,v,t}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VRealization {
    pub states: Vec<usize>,
    /// Vertex index used for the step out of stage `n`.
    pub vertices: Vec<usize>,
    /// `counts[s][v][t] = N_{s,v,t}`.
    pub counts: Vec<Vec<Vec<u64>>>,
}

impl VRealization {
    /// Number of transitions `N`.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `N_{s,v,·}`.
    pub fn n_sv(&self, s: usize, v: usize) -> u64 {
        self.counts[s][v].iter().sum()
    }

    /// `N_s`.
    pub fn n_s(&self, s: usize) -> u64 {
        (0..self.counts[s].len()).map(|v| self.n_sv(s, v)).sum()
    }

    /// `p^z((s,v),t)`, zero when `v` was never used at `s`.
    pub fn p_sv(&self, s: usize, v: usize, t: usize) -> f64 {
        let n = self.n_sv(s, v);
        if n == 0 {
            0.0
        } else {
            self.counts[s][v][t] as f64 / n as f64
        }
    }

    /// `p^z(s,t)`.
    pub fn p_z(&self, s: usize, t: usize) -> f64 {
        let n = self.n_s(s);
        if n == 0 {
            return 0.0;
        }
        self.counts[s].iter().map(|row| row[t]).sum::<u64>() as f64 / n as f64
    }

    /// `u^z(s,·) = Σ_v (N_{s,v,·}/N_s) v`, the average point of `V(s)` used
    /// at `s`.
    pub fn average_point(&self, s: usize, v: &ProductPolyhedron) -> Option<Vec<f64>> {
        let ns = self.n_s(s);
        (ns > 0).then(|| {
            let w: Vec<f64> = (0..self.counts[s].len())
                .map(|j| self.n_sv(s, j) as f64 / ns as f64)
                .collect();
            mixture(v.get(s).vertices(), &w)
        })
    }

    pub fn sequence(&self, v: &ProductPolyhedron) -> ObservedSequence {
        ObservedSequence::new(v.alphabet.clone(), self.states.clone()).expect("states index the alphabet")
    }
}

pub fn simulate_v_process<R: Rng + ?Sized>(
    v: &ProductPolyhedron,
    policy: &VProcessPolicy,
    n: usize,
    start: usize,
    rng: &mut R,
) -> VRealization {
    let dim = v.num_states();
    let mut counts: Vec<Vec<Vec<u64>>> = (0..dim)
        .map(|s| vec![vec![0; dim]; v.get(s).vertices().len()])
        .collect();
    let mut visits = vec![0usize; dim];
    let mut states = Vec::with_capacity(n + 1);
    let mut vertices = Vec::with_capacity(n);
    let mut z = start;
    states.push(z);
    for _ in 0..n {
        let verts = v.get(z).vertices();
        let j = match policy {
            VProcessPolicy::Fixed(w) => sample_categorical(&w[z], rng),
            VProcessPolicy::Iid => {
                let mut w: Vec<f64> = (0..verts.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= total);
                sample_categorical(&w, rng)
            }
            VProcessPolicy::Cycling => visits[z] % verts.len(),
        };
        visits[z] += 1;
        let next = sample_categorical(&verts[j], rng);
        counts[z][j][next] += 1;
        vertices.push(j);
        states.push(next);
        z = next;
    }
    VRealization {
        states,
        vertices,
        counts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TStarReport {
    pub threshold: f64,
    pub epsilon_prime: f64,
    /// Triples `(s, v, t)` whose antecedent holds.
    pub triggered: usize,
    /// Triggered triples whose relative deviation exceeds `ε'`.
    pub violations: Vec<(usize, usize, usize)>,
    pub holds: bool,
}

/// For every `(s,v,t)`: `N_{s,v,·} max{v(t), p^z((s,v),t)} >= N^{δ/2}`
/// implies `|p^z((s,v),t)/v(t) - 1| <= ε'`.
pub fn tstar_check(real: &VRealization, v: &ProductPolyhedron, delta: f64, epsilon_prime: f64) -> TStarReport {
    let threshold = (real.len() as f64).powf(delta / 2.0);
    let mut triggered = 0;
    let mut violations = Vec::new();
    for s in 0..v.num_states() {
        for (j, vert) in v.get(s).vertices().iter().enumerate() {
            let nsv = real.n_sv(s, j) as f64;
            for (t, &vt) in vert.iter().enumerate() {
                let pz = real.p_sv(s, j, t);
                if nsv * vt.max(pz) < threshold {
                    continue;
                }
                triggered += 1;
                let dev = if vt > 0.0 { (pz / vt - 1.0).abs() } else { f64::INFINITY };
                if dev > epsilon_prime {
                    violations.push((s, j, t));
                }
            }
        }
    }
    TStarReport {
        threshold,
        epsilon_prime,
        triggered,
        holds: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Report {
    pub seed: u64,
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub realizations: usize,
    pub typical: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Theorem5Report {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("typical fraction of V-processes");
        r.field("rng", RNG_DESCRIPTION)
            .field("seed", self.seed)
            .field("n", self.n)
            .field("delta", self.delta)
            .field("epsilon", self.epsilon)
            .field("realizations", self.realizations)
            .field("typical", self.typical)
            .field("fraction", self.fraction)
            .field("ci_low", self.ci_low)
            .field("ci_high", self.ci_high);
        r
    }
}

/// Fraction of simulated V-processes (started at state 0) whose paths are
/// `(N, δ, ε)`-typical.
pub fn theorem5_estimate(
    v: &ProductPolyhedron,
    policy: &VProcessPolicy,
    n: usize,
    delta: f64,
    epsilon: f64,
    realizations: usize,
    seed: u64,
) -> Result<Theorem5Report> {
    policy.validate(v)?;
    let verdicts = run_trials(realizations, seed, |rng| {
        let real = simulate_v_process(v, policy, n, 0, rng);
        is_typical(&real.sequence(v), v, delta, epsilon).map(|t| t.certificate().is_some())
    });
    let mut typical = 0;
    for verdict in verdicts {
        typical += usize::from(verdict?);
    }
    let (ci_low, ci_high) = wilson_interval(typical, realizations);
    Ok(Theorem5Report {
        seed,
        n,
        delta,
        epsilon,
        realizations,
        typical,
        fraction: typical as f64 / realizations.max(1) as f64,
        ci_low,
        ci_high,
    })
}
