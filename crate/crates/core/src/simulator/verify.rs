use serde::{Deserialize, Serialize};

use super::{count_n0, occupancy, run_trials, simulate_hidden, simulate_piecewise, wilson_interval, RNG_DESCRIPTION};
use crate::approximator::{check_constants_basic, PiecewiseChain};
use crate::constrained::{check_constants_general, compute_b, HiddenChainSpec};
use crate::error::{check_open_interval, Result};
use crate::report::Report;
use crate::sequence::{Alphabet, ObservedSequence};
use crate::subset::StateSet;

/// Frequency with which a state's simulated occupancy strays from its
/// reference by a relative `ε` or more.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDeviation {
    pub state: usize,
    pub reference: f64,
    /// Counted in the verdict.
    pub qualifying: bool,
    pub exceed: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N0Stats {
    pub mean: f64,
    pub max: usize,
    /// `N^ψ B`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub epsilon: f64,
    /// The asymptotic bound on each deviation frequency.
    pub bound: f64,
    /// The bound actually enforced: `bound`, or `max(bound, 0.05)` when relaxed.
    pub threshold: f64,
    /// The constants conditions fail at this `N`.
    pub relaxed: bool,
    pub states: Vec<StateDeviation>,
    pub n0: Option<N0Stats>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn max_qualifying_frequency(&self) -> f64 {
        self.states
            .iter()
            .filter(|d| d.qualifying)
            .map(|d| d.frequency)
            .fold(0.0, f64::max)
    }

    pub fn to_report(&self, title: &str) -> Report {
        let mut r = Report::new(title);
        r.field("rng", RNG_DESCRIPTION)
            .field("seed", self.seed)
            .field("trials", self.trials)
            .field("n", self.n)
            .field("epsilon", self.epsilon)
            .field("bound", self.bound)
            .field("threshold", self.threshold)
            .field("relaxed", self.relaxed);
        let rows = self
            .states
            .iter()
            .map(|d| {
                vec![
                    d.state.into(),
                    d.reference.into(),
                    d.qualifying.into(),
                    d.exceed.into(),
                    d.frequency.into(),
                    d.ci_low.into(),
                    d.ci_high.into(),
                ]
            })
            .collect();
        r.table(
            "deviations",
            &[
                "state",
                "reference",
                "qualifying",
                "exceed",
                "frequency",
                "ci_low",
                "ci_high",
            ],
            rows,
        );
        if let Some(n0) = &self.n0 {
            r.field("n0_mean", n0.mean)
                .field("n0_max", n0.max)
                .field("n0_bound", n0.bound);
        }
        r.field("pass", self.pass);
        r
    }
}

/// Per-state frequencies of `|ν(s)/reference(s) - 1| >= eps` over `paths`,
/// where `ν` is the occupancy of the first `n` stages.
pub fn deviation_frequencies(
    paths: impl IntoIterator<Item = Vec<f64>>,
    reference: &[f64],
    eps: f64,
    min_reference: f64,
) -> Vec<StateDeviation> {
    let mut exceed = vec![0usize; reference.len()];
    let mut trials = 0;
    for nu in paths {
        trials += 1;
        for (s, &r) in reference.iter().enumerate() {
            if r > 0.0 && (nu[s] / r - 1.0).abs() >= eps {
                exceed[s] += 1;
            }
        }
    }
    reference
        .iter()
        .enumerate()
        .map(|(s, &r)| {
            let (ci_low, ci_high) = wilson_interval(exceed[s], trials);
            StateDeviation {
                state: s,
                reference: r,
                qualifying: r >= min_reference && r > 0.0,
                exceed: exceed[s],
                frequency: exceed[s] as f64 / trials.max(1) as f64,
                ci_low,
                ci_high,
            }
        })
        .collect()
}

/// Largest sup-norm gap between a piece kernel and the observed kernel on
/// the rows of its atom, with the escape-mass bound `max_s R_{S_k}/N_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceDeviation {
    pub atom: StateSet,
    pub deviation: f64,
    pub escape_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct B2Report {
    pub pieces: Vec<PieceDeviation>,
    pub max_deviation: f64,
    pub epsilon: f64,
    pub pass: bool,
}

impl B2Report {
    pub fn to_report(&self, alphabet: &Alphabet) -> Report {
        let mut r = Report::new("structural deviation");
        let rows = self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                vec![
                    k.into(),
                    alphabet.format_subset(p.atom).into(),
                    p.deviation.into(),
                    p.escape_bound.into(),
                ]
            })
            .collect();
        r.table("pieces", &["piece", "atom", "deviation", "escape_bound"], rows);
        r.field("max_deviation", self.max_deviation)
            .field("epsilon", self.epsilon)
            .field("pass", self.pass);
        r
    }
}

/// Within piece `k` the chain sits in `S_k` at every stage but the last, so
/// its law there differs from the observed one by at most this deviation.
pub fn verify_b2(chain: &PiecewiseChain, x_star: &ObservedSequence, epsilon: f64) -> B2Report {
    let counts = x_star.count_transitions();
    let p = counts.observed_transition_matrix().matrix;
    let pieces: Vec<PieceDeviation> = chain
        .pieces
        .iter()
        .map(|piece| {
            let runs = x_star.run_count(piece.atom) as f64;
            let deviation = piece
                .atom
                .iter()
                .map(|s| piece.kernel.row_distance(&p, s))
                .fold(0.0, f64::max);
            let escape_bound = piece
                .atom
                .iter()
                .map(|s| runs / counts.row_total(s) as f64)
                .fold(0.0, f64::max);
            PieceDeviation {
                atom: piece.atom,
                deviation,
                escape_bound,
            }
        })
        .collect();
    let max_deviation = pieces.iter().map(|p| p.deviation).fold(0.0, f64::max);
    B2Report {
        pieces,
        max_deviation,
        epsilon,
        pass: max_deviation <= epsilon,
    }
}

/// Monte Carlo frequency of `|ν_N(s)/ν^{x*}(s) - 1| >= ε` for each state
/// with `ν^{x*}(s) >= N^{-δ}`, against `N^{-ζ}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_b1(
    chain: &PiecewiseChain,
    x_star: &ObservedSequence,
    epsilon: f64,
    delta: f64,
    zeta: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    check_open_interval("epsilon", epsilon, 0.0, 1.0)?;
    check_open_interval("delta", delta, 0.0, 1.0)?;
    check_open_interval("zeta", zeta, 0.0, f64::INFINITY)?;
    let n = chain.total_length();
    let s = chain.alphabet.len();
    let reference = x_star.count_transitions().occupancy().weights;
    let nf = n as f64;
    // parameters outside the provable range also run relaxed
    let relaxed = !check_constants_basic(s, n as u64, epsilon, delta, zeta).is_ok_and(|c| c.all_hold());
    let bound = nf.powf(-zeta);
    let nus = run_trials(trials, seed, |rng| {
        let path = simulate_piecewise(chain, rng);
        occupancy(&path[..n], s)
    });
    let states = deviation_frequencies(nus, &reference, epsilon, nf.powf(-delta));
    Ok(finish(seed, trials, n, epsilon, bound, relaxed, states, None))
}

/// Monte Carlo check of the hidden chain: occupancy deviations against
/// `N^{-δ}` and the mean count of steps whose visible row is `η`-far from the
/// observed one, against `N^ψ B`.
pub fn verify_g1_g2(
    spec: &HiddenChainSpec,
    eta: f64,
    psi: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    check_open_interval("eta", eta, 0.0, 1.0)?;
    check_open_interval("psi", psi, 0.0, 1.0)?;
    let n = spec.total_length();
    let s = spec.num_states();
    let delta = spec.params.delta;
    let b = compute_b(&spec.b)?;
    let nf = n as f64;
    let relaxed = !check_constants_general(s, n as u64, spec.x_star.transitions() as u64, psi, eta, b, (1, s))
        .is_ok_and(|c| c.all_hold());
    let reference = spec.x_star.count_transitions().occupancy().weights;
    let results = run_trials(trials, seed, |rng| {
        let real = simulate_hidden(spec, rng);
        (occupancy(&real.z[..n], s), count_n0(spec, &real.omega, eta))
    });
    let n0_mean = results.iter().map(|r| r.1 as f64).sum::<f64>() / trials.max(1) as f64;
    let n0 = N0Stats {
        mean: n0_mean,
        max: results.iter().map(|r| r.1).max().unwrap_or(0),
        bound: nf.powf(psi) * b,
    };
    let states = deviation_frequencies(results.into_iter().map(|r| r.0), &reference, eta, nf.powf(-delta));
    Ok(finish(seed, trials, n, eta, nf.powf(-delta), relaxed, states, Some(n0)))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    seed: u64,
    trials: usize,
    n: usize,
    epsilon: f64,
    bound: f64,
    relaxed: bool,
    states: Vec<StateDeviation>,
    n0: Option<N0Stats>,
) -> VerificationReport {
    let threshold = if relaxed { bound.max(0.05) } else { bound };
    let freq_ok = states.iter().filter(|d| d.qualifying).all(|d| d.frequency <= threshold);
    let n0_ok = n0.as_ref().is_none_or(|n0| n0.mean <= n0.bound);
    VerificationReport {
        seed,
        trials,
        n,
        epsilon,
        bound,
        threshold,
        relaxed,
        states,
        n0,
        pass: freq_ok && n0_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{build_basic, two_block_sequence};

    #[test]
    fn one_atom_partition_has_zero_structural_deviation() {
        let x = ObservedSequence::parse("a b c a c b b a ".repeat(30).trim_end()).unwrap();
        let basic = build_basic(&x, 0.1).unwrap();
        assert_eq!(basic.chain.pieces.len(), 1);
        let r = verify_b2(&basic.chain, &basic.x_star_sequence(), 0.1);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn two_block_deviation_is_escape_mass() {
        let basic = build_basic(&two_block_sequence(1000), 0.1).unwrap();
        let r = verify_b2(&basic.chain, &basic.x_star_sequence(), 0.1);
        assert_eq!(r.pieces.len(), 2);
        for p in &r.pieces {
            assert!((p.deviation - 0.001).abs() < 1e-15);
            assert!(p.deviation <= p.escape_bound + 1e-15);
        }
    }

    #[test]
    fn non_qualifying_states_are_reported_but_ignored() {
        let nus = vec![vec![0.9, 0.1], vec![0.9, 0.1]];
        let d = deviation_frequencies(nus, &[0.5, 0.5], 0.1, 0.6);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|d| !d.qualifying && d.frequency == 1.0));
        let r = finish(0, 2, 10, 0.1, 0.01, false, d, None);
        assert!(r.pass);
    }

    #[test]
    fn b1_on_the_two_block_fixture() {
        let x = two_block_sequence(1000);
        let basic = build_basic(&x, 0.1).unwrap();
        let x_star = basic.x_star_sequence();
        let r = verify_b1(&basic.chain, &x_star, 0.1, 0.1, 0.1, 200, 3).unwrap();
        assert!(r.relaxed && r.pass);
        assert_eq!(r.max_qualifying_frequency(), 0.0);
        let naive = PiecewiseChain::homogeneous(
            x.alphabet().clone(),
            basic.p_star.clone(),
            x_star.transitions(),
            x_star.first(),
        );
        let r = verify_b1(&naive, &x_star, 0.1, 0.1, 0.1, 200, 3).unwrap();
        assert!(r.max_qualifying_frequency() > 0.2);
    }
}
