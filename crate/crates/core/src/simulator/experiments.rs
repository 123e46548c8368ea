use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_trials, sample_categorical, standard_error, RNG_DESCRIPTION};
use crate::chain::TransitionMatrix;
use crate::constrained::bernoulli_tail_constant;
use crate::error::{check_open_interval, Error, Result};
use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub epsilon: f64,
    pub start: usize,
    pub gamma: f64,
    pub mu: Vec<f64>,
    /// `17 γ / (n ε²)`.
    pub bound: f64,
    pub vacuous: bool,
    /// Per state, the frequency of `|ν̄_n(s)/μ(s) - 1| >= ε`.
    pub frequencies: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Largest `|ν̄_n(s) - ν_n(s)|` seen on any realization.
    pub max_shift_gap: f64,
    pub pass: bool,
}

impl Theorem3Report {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("mixing bound experiment");
        r.field("rng", RNG_DESCRIPTION)
            .field("seed", self.seed)
            .field("trials", self.trials)
            .field("n", self.n)
            .field("epsilon", self.epsilon)
            .field("start", self.start)
            .field("gamma", self.gamma)
            .field("bound", self.bound)
            .field("vacuous", if self.vacuous { "vacuous bound" } else { "no" });
        let rows = (0..self.mu.len())
            .map(|s| {
                vec![
                    s.into(),
                    self.mu[s].into(),
                    self.frequencies[s].into(),
                    self.standard_errors[s].into(),
                ]
            })
            .collect();
        r.table("states", &["state", "mu", "frequency", "standard_error"], rows);
        r.field("max_shift_gap", self.max_shift_gap).field("pass", self.pass);
        r
    }
}

/// Estimates `P_t(|ν̄_n(s)/μ(s) - 1| >= ε)` for each `s`, where `ν̄_n` is the
/// occupancy of stages `1..=n`, and compares it with `17γ/(nε²)`.
pub fn theorem3_experiment(
    p: &TransitionMatrix,
    n: usize,
    epsilon: f64,
    start: usize,
    trials: usize,
    seed: u64,
) -> Result<Theorem3Report> {
    check_open_interval("epsilon", epsilon, 0.0, 0.5)?;
    let gamma = p.gamma_mixing_constant()?;
    if epsilon * n as f64 <= 4.0 * gamma {
        return Err(Error::ParameterOutOfRange {
            name: "n",
            value: n as f64,
            range: format!("epsilon * n > 4 gamma = {gamma}"),
        });
    }
    let mu = p.invariant_measure()?.weights;
    let dim = p.num_states();
    let nf = n as f64;
    let outcomes = run_trials(trials, seed, |rng| {
        let mut counts = vec![0usize; dim];
        let mut z = start;
        for _ in 0..n {
            z = sample_categorical(p.row(z), rng);
            counts[z] += 1;
        }
        // ν_n counts stages 0..n-1: swap the last stage for the first
        let mut lagged = counts.clone();
        lagged[z] -= 1;
        lagged[start] += 1;
        let gap = (0..dim)
            .map(|s| (counts[s] as f64 - lagged[s] as f64).abs() / nf)
            .fold(0.0, f64::max);
        let exceed: Vec<bool> = (0..dim)
            .map(|s| (counts[s] as f64 / nf / mu[s] - 1.0).abs() >= epsilon)
            .collect();
        (exceed, gap)
    });
    let frequencies: Vec<f64> = (0..dim)
        .map(|s| outcomes.iter().filter(|o| o.0[s]).count() as f64 / trials as f64)
        .collect();
    let standard_errors: Vec<f64> = frequencies.iter().map(|&f| standard_error(f, trials)).collect();
    let bound = 17.0 * gamma / (nf * epsilon * epsilon);
    let max_shift_gap = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    let pass = (0..dim).all(|s| frequencies[s] <= bound + 3.0 * standard_errors[s]) && max_shift_gap <= 1.0 / nf;
    Ok(Theorem3Report {
        seed,
        trials,
        n,
        epsilon,
        start,
        gamma,
        mu,
        bound,
        vacuous: bound >= 1.0,
        frequencies,
        standard_errors,
        max_shift_gap,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliTailReport {
    pub p: f64,
    pub epsilon: f64,
    pub k: f64,
    pub n_max: usize,
    pub c: f64,
    /// `2 e^{-c k} / (1 - e^{-c p})`.
    pub bound: f64,
    pub frequency: f64,
    pub standard_error: f64,
    pub pass: bool,
}

/// Frequency of `sup_{pn >= k, n <= n_max} |X̄_n - p| > εp` for i.i.d.
/// Bernoulli(`p`) streams.
pub fn bernoulli_tail_experiment(
    p: f64,
    epsilon: f64,
    k: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<BernoulliTailReport> {
    check_open_interval("p", p, 0.0, 1.0)?;
    check_open_interval("epsilon", epsilon, 0.0, f64::INFINITY)?;
    let c = bernoulli_tail_constant(epsilon);
    let bound = 2.0 * (-c * k).exp() / (1.0 - (-c * p).exp());
    let n_min = (k / p).ceil().max(1.0) as usize;
    let hits = run_trials(trials, seed, |rng| {
        let mut sum = 0u64;
        for n in 1..=n_max {
            sum += u64::from(rng.random::<f64>() < p);
            if n >= n_min && (sum as f64 / n as f64 - p).abs() > epsilon * p {
                return true;
            }
        }
        false
    });
    let frequency = hits.iter().filter(|&&h| h).count() as f64 / trials as f64;
    let se = standard_error(frequency, trials);
    Ok(BernoulliTailReport {
        p,
        epsilon,
        k,
        n_max,
        c,
        bound,
        frequency,
        standard_error: se,
        pass: frequency <= bound + 3.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap()
    }

    #[test]
    fn vacuous_bound_is_flagged() {
        let r = theorem3_experiment(&f3(), 200, 0.4, 0, 50, 1).unwrap();
        assert!((r.gamma - 4.0).abs() < 1e-9);
        assert!((r.bound - 2.125).abs() < 1e-9);
        assert!(r.vacuous && r.pass);
    }

    #[test]
    fn small_n_is_rejected() {
        assert!(matches!(
            theorem3_experiment(&f3(), 20, 0.2, 0, 10, 1),
            Err(Error::ParameterOutOfRange { .. })
        ));
        assert!(theorem3_experiment(&f3(), 2000, 0.6, 0, 10, 1).is_err());
    }

    #[test]
    fn long_runs_sit_well_below_the_bound() {
        let r = theorem3_experiment(&f3(), 10_000, 0.2, 0, 2000, 11).unwrap();
        assert!((r.bound - 0.17).abs() < 1e-12);
        assert!(r.frequencies.iter().all(|&f| f < 0.01));
        assert!(r.max_shift_gap <= 1e-4 && r.pass);
    }

    #[test]
    fn bernoulli_tail_below_bound() {
        let r = bernoulli_tail_experiment(0.5, 0.5, 50.0, 2000, 2000, 5).unwrap();
        assert!(r.bound < 0.2 && r.pass);
    }
}
