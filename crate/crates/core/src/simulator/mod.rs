//! Seeded simulation of piecewise chains, hidden chains and V-processes,
//! and Monte Carlo checks of the approximation guarantees.
//!
//! Trial `i` of a run with master seed `m` draws from ChaCha20 seeded by
//! `seed_from_u64(m)` on stream `i`, so results do not depend on thread count
//! or scheduling. Categorical draws invert the CDF in state-index order.

mod experiments;
mod verify;
mod vprocess;

pub use experiments::{bernoulli_tail_experiment, theorem3_experiment, BernoulliTailReport, Theorem3Report};
pub use verify::{
    deviation_frequencies, verify_b1, verify_b2, verify_g1_g2, B2Report, N0Stats, PieceDeviation, StateDeviation,
    VerificationReport,
};
pub use vprocess::{
    simulate_v_process, theorem5_estimate, tstar_check, TStarReport, Theorem5Report, VProcessPolicy, VRealization,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::approximator::PiecewiseChain;
use crate::constrained::{HiddenChainSpec, OmegaState, Rule};

/// Stated in every simulation report.
pub const RNG_DESCRIPTION: &str = "ChaCha20 (rand_chacha 0.9); trial i uses seed_from_u64(seed) on stream i";

/// The generator of trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent trials in parallel; results come back in trial
/// order.
pub fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha20Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(seed, i as u64)))
        .collect()
}

/// Inverse-CDF draw from `row`.
pub fn sample_categorical<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total mass
    row.iter().rposition(|&p| p > 0.0).expect("rows carry mass")
}

/// A realization `z_0, .., z_N` of a piecewise chain.
pub fn simulate_piecewise<R: Rng + ?Sized>(chain: &PiecewiseChain, rng: &mut R) -> Vec<usize> {
    let n = chain.total_length();
    let mut path = Vec::with_capacity(n + 1);
    let mut z = sample_categorical(&chain.initial, rng);
    path.push(z);
    for step in 0..n {
        let k = chain.piece_for_transition(step);
        z = sample_categorical(chain.pieces[k].kernel.row(z), rng);
        path.push(z);
    }
    path
}

/// A hidden-chain realization over `Ω` with its projection on `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenRealization {
    pub omega: Vec<OmegaState>,
    pub z: Vec<usize>,
}

/// One step of piece `k` from `w`.
pub fn hidden_step<R: Rng + ?Sized>(spec: &HiddenChainSpec, k: usize, w: OmegaState, rng: &mut R) -> OmegaState {
    let atom = spec.atoms[k];
    match spec.rule(k, w) {
        Rule::FollowV => {
            let s2 = sample_categorical(spec.v.row(w.s), rng);
            if atom.contains(s2) {
                OmegaState::free(s2)
            } else {
                let t = sample_categorical(&spec.entry[k][s2], rng);
                OmegaState { s: s2, target: Some(t) }
            }
        }
        Rule::ChaseTarget(t) => {
            let s2 = sample_categorical(spec.b.row(w.s), rng);
            OmegaState {
                s: s2,
                target: (s2 != t).then_some(t),
            }
        }
        Rule::Reenter => {
            let s2 = sample_categorical(spec.b.row(w.s), rng);
            let t = sample_categorical(&spec.entry[k][w.s], rng);
            OmegaState {
                s: s2,
                target: (s2 != t).then_some(t),
            }
        }
    }
}

pub fn simulate_hidden<R: Rng + ?Sized>(spec: &HiddenChainSpec, rng: &mut R) -> HiddenRealization {
    let n = spec.total_length();
    let mut omega = Vec::with_capacity(n + 1);
    let mut w = spec.initial;
    omega.push(w);
    for step in 0..n {
        w = hidden_step(spec, spec.piece_for_transition(step), w, rng);
        omega.push(w);
    }
    let z = omega.iter().map(|w| w.s).collect();
    HiddenRealization { omega, z }
}

/// `N_0`: steps whose visible row is more than `eta` from the observed row of
/// the extension in sup norm.
pub fn count_n0(spec: &HiddenChainSpec, omega: &[OmegaState], eta: f64) -> usize {
    (0..omega.len() - 1)
        .filter(|&step| {
            let w = omega[step];
            let row = spec.visible_row(spec.piece_for_transition(step), w);
            row.iter().zip(spec.p_star.row(w.s)).any(|(a, b)| (a - b).abs() > eta)
        })
        .count()
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // exact at the endpoints despite rounding
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Binomial standard error of a frequency.
pub fn standard_error(freq: f64, n: usize) -> f64 {
    (freq * (1.0 - freq) / n as f64).sqrt()
}

/// Normalized visit counts along `path`.
pub(crate) fn occupancy(path: &[usize], num_states: usize) -> Vec<f64> {
    let mut w = vec![0.0; num_states];
    for &s in path {
        w[s] += 1.0;
    }
    let len = path.len() as f64;
    w.iter_mut().for_each(|x| *x /= len);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TransitionMatrix;
    use crate::constrained::{build_hidden, is_typical, HiddenParams, ProductPolyhedron};
    use crate::sequence::{Alphabet, ObservedSequence};

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn two_cycle_alternates() {
        let p = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let chain = PiecewiseChain::homogeneous(ab(), p, 6, 0);
        let path = simulate_piecewise(&chain, &mut trial_rng(1, 0));
        assert_eq!(path, vec![0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn seeds_are_reproducible() {
        let p = TransitionMatrix::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let chain = PiecewiseChain::homogeneous(ab(), p, 500, 0);
        let a = simulate_piecewise(&chain, &mut trial_rng(9, 3));
        let b = simulate_piecewise(&chain, &mut trial_rng(9, 3));
        let c = simulate_piecewise(&chain, &mut trial_rng(9, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 501);
        let par = run_trials(8, 5, |rng| simulate_piecewise(&chain, rng));
        let seq: Vec<_> = (0..8)
            .map(|i| simulate_piecewise(&chain, &mut trial_rng(5, i)))
            .collect();
        assert_eq!(par, seq);
    }

    #[test]
    fn one_step_frequencies_match_kernel() {
        let p = TransitionMatrix::new(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.25, 0.25, 0.5]]).unwrap();
        let chain = PiecewiseChain::homogeneous(Alphabet::numbered(3), p.clone(), 100_000, 0);
        let path = simulate_piecewise(&chain, &mut trial_rng(2, 0));
        let mut counts = [[0usize; 3]; 3];
        for w in path.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for s in 0..3 {
            let ns: usize = counts[s].iter().sum();
            for t in 0..3 {
                let f = counts[s][t] as f64 / ns as f64;
                let se = (p.get(s, t) * (1.0 - p.get(s, t)) / ns as f64).sqrt();
                assert!((f - p.get(s, t)).abs() <= 3.0 * se, "({s},{t}) {f}");
            }
        }
    }

    #[test]
    fn categorical_edges() {
        let mut rng = trial_rng(0, 0);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 10), (3, 10), (10, 10), (50, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn hidden_paths_respect_support_and_clear_targets() {
        let text = "a a b a b b b a a a b a b b a a a a b b a b a a b b b ".repeat(40) + "a";
        let x = ObservedSequence::parse(&text).unwrap();
        let p = x.count_transitions().observed_transition_matrix().matrix;
        let v = ProductPolyhedron::singletons(ab(), &p).unwrap();
        let cert = is_typical(&x, &v, 0.3, 0.2).unwrap().certificate().cloned().unwrap();
        let params = HiddenParams {
            epsilon: 0.2,
            delta: 0.1,
            delta_prime: 0.3,
            xi: 0.2,
        };
        let spec = build_hidden(&x, &v, &p, params, &cert).unwrap();
        let real = simulate_hidden(&spec, &mut trial_rng(4, 0));
        assert_eq!(real.z.len(), x.transitions() + 1);
        for (step, pair) in real.omega.windows(2).enumerate() {
            let k = spec.piece_for_transition(step);
            let law = spec.transition_law(k, pair[0]);
            assert!(law.iter().any(|(w, _)| *w == pair[1]), "step {step}: {pair:?}");
            if let Some(t) = pair[0].target.filter(|&t| t != pair[0].s && spec.atoms[k].contains(t)) {
                assert_eq!(pair[1].target.is_none(), pair[1].s == t);
            }
        }
        // v = p exactly, so only b-steps may deviate
        assert_eq!(count_n0(&spec, &real.omega, 0.0), {
            (0..x.transitions())
                .filter(|&n| {
                    let w = real.omega[n];
                    spec.rule(spec.piece_for_transition(n), w) != Rule::FollowV
                        && spec.b.row(w.s) != spec.p_star.row(w.s)
                })
                .count()
        });
    }
}
