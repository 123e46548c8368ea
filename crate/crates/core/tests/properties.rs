#![allow(clippy::needless_range_loop)]

mod common;

use common::{full, random_chain, runs, ExactChain};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqchain::approximator::build_basic;
use seqchain::constrained::{
    build_hidden, check_constants_general, combinatorial_l, find_irreducible_b, is_typical, HiddenParams, Polyhedron,
    ProductPolyhedron,
};
use seqchain::partition::structure_partition;
use seqchain::simulator::{run_trials, simulate_hidden, simulate_piecewise, trial_rng, wilson_interval};
use seqchain::{Alphabet, ObservedSequence, StateSet, TransitionMatrix};

fn sequence() -> impl Strategy<Value = ObservedSequence> {
    (2usize..=5)
        .prop_flat_map(|k| (Just(k), prop::collection::vec(0..k, 2..120)))
        .prop_map(|(k, entries)| ObservedSequence::new(Alphabet::numbered(k), entries).unwrap())
}

fn chain() -> impl Strategy<Value = ExactChain> {
    (2usize..=4, any::<u64>()).prop_map(|(k, seed)| random_chain(&mut ChaCha8Rng::seed_from_u64(seed), k, 9, 0.3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_recount_from_the_sequence(x in sequence()) {
        let counts = x.count_transitions();
        let k = x.num_states();
        prop_assert_eq!(counts.total(), x.transitions() as u64);
        let mut recount = vec![vec![0u64; k]; k];
        for w in x.entries().windows(2) {
            recount[w[0]][w[1]] += 1;
        }
        for s in 0..k {
            prop_assert_eq!(counts.row_total(s), recount[s].iter().sum::<u64>());
            for t in 0..k {
                prop_assert_eq!(counts.get(s, t), recount[s][t]);
            }
        }
        let total: f64 = counts.occupancy().weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn text_round_trip_keeps_symbols(x in sequence()) {
        let back = ObservedSequence::parse(&x.to_text()).unwrap();
        let alphabet = x.alphabet();
        for i in 0..alphabet.len() {
            prop_assert_eq!(alphabet.index_of(alphabet.symbol(i)), Some(i));
        }
        let symbols = |y: &ObservedSequence| -> Vec<String> {
            y.entries().iter().map(|&e| y.alphabet().symbol(e).to_string()).collect()
        };
        prop_assert_eq!(symbols(&back), symbols(&x));
    }

    #[test]
    fn partitions_cover_with_nonempty_atoms(x in sequence(), a in 0.1f64..20.0) {
        let p = structure_partition(&x, a).unwrap();
        let mut union = StateSet::EMPTY;
        for &c in &p.atoms {
            prop_assert!(!c.is_empty());
            prop_assert!(union.intersection(c).is_empty());
            union = union.union(c);
        }
        prop_assert_eq!(union, StateSet::full(x.num_states()));
        for &c in &p.atoms {
            prop_assert!(runs(x.entries(), c.bits()) as f64 <= p.run_ceiling());
        }
    }

    #[test]
    fn invariant_measure_is_fixed(c in chain()) {
        let p = c.to_matrix();
        let mu = p.invariant_measure().unwrap().weights;
        for t in 0..p.num_states() {
            let image: f64 = (0..p.num_states()).map(|s| mu[s] * p.get(s, t)).sum();
            prop_assert!((image - mu[t]).abs() <= 1e-9);
        }
        prop_assert!(p.gamma_mixing_constant().unwrap() >= 1.0);
    }

    #[test]
    fn exit_time_constants_are_ordered(c in chain(), pick in any::<u64>()) {
        let p = c.to_matrix();
        let k = p.num_states();
        let set = StateSet::from_bits(1 + pick % (full(k) - 1));
        let stats = p.mixing_stats(set).unwrap();
        prop_assert!(stats.lambda >= stats.rho);
        let least = p.exit_time_min(set);
        prop_assert!(least <= stats.visit_len * (1.0 + 1e-12));
        prop_assert!(stats.visit_len <= stats.lambda * (1.0 + 1e-12));
    }

    #[test]
    fn basic_pieces_are_stochastic_on_their_atoms(x in sequence(), delta in 0.05f64..0.5) {
        let Ok(approx) = build_basic(&x, delta) else {
            return Ok(());
        };
        let chain = &approx.chain;
        let x_star = approx.x_star_sequence();
        prop_assert_eq!(chain.total_length(), x_star.transitions());
        for piece in &chain.pieces {
            for s in 0..x.num_states() {
                let row = piece.kernel.row(s);
                let inside: f64 = piece.atom.iter().map(|t| row[t]).sum();
                prop_assert!((inside - 1.0).abs() <= 1e-10);
            }
        }
        let path = simulate_piecewise(chain, &mut trial_rng(1, 0));
        prop_assert_eq!(path.len(), chain.total_length() + 1);
    }

    #[test]
    fn wilson_interval_contains_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).round() as usize;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p && p <= hi);
    }

    #[test]
    fn general_constants_follow_their_definitions(
        k in 2usize..5,
        psi in 0.05f64..0.95,
        eta in 0.05f64..0.95,
        b in 1.0f64..100.0,
    ) {
        let g = check_constants_general(k, 100_000, 100_003, psi, eta, b, (2, 2 * k)).unwrap();
        let exact: u64 = (1..=k as u64)
            .map(|n| {
                let binom = (0..n).fold(1u64, |acc, i| acc * (k as u64 - i) / (i + 1));
                binom * n.pow(k as u32)
            })
            .sum();
        prop_assert_eq!(g.l, exact as f64);
        prop_assert_eq!(combinatorial_l(k), exact as f64);
        let s = k as f64;
        prop_assert!((g.alpha * 2.0 * g.beta * s * g.l * g.l - 1.0).abs() <= 1e-12);
        prop_assert!((g.alpha_prime - (g.alpha / 2.0 - s) / (2.0 * s)).abs() <= 1e-9 * g.alpha_prime.abs());
        prop_assert_eq!(g.a_const, 0.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trials_ignore_thread_count(seed in any::<u64>()) {
        let draw = |rng: &mut rand_chacha::ChaCha20Rng| rand::Rng::random::<u64>(rng);
        let parallel = run_trials(64, seed, draw);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| run_trials(64, seed, draw));
        prop_assert_eq!(parallel, single);
    }

    #[test]
    fn hidden_paths_follow_the_piece_laws(seed in any::<u64>()) {
        let v = ProductPolyhedron::new(
            Alphabet::new(["a", "b", "c"]).unwrap(),
            vec![
                Polyhedron::new(vec![vec![0.7, 0.2995, 0.0005], vec![0.5, 0.4995, 0.0005]]).unwrap(),
                Polyhedron::new(vec![vec![0.5, 0.5, 0.0], vec![0.3, 0.7, 0.0]]).unwrap(),
                Polyhedron::new(vec![vec![0.002, 0.0, 0.998], vec![0.004, 0.0, 0.996]]).unwrap(),
            ],
        )
        .unwrap();
        let b = find_irreducible_b(&v).unwrap();
        let rows = b.to_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut path = vec![0];
        for _ in 0..5000 {
            path.push(common::draw(&rows[*path.last().unwrap()], &mut rng));
        }
        let x = ObservedSequence::new(v.alphabet.clone(), path).unwrap();
        let params = HiddenParams { epsilon: 0.3, delta: 0.3, delta_prime: 0.4, xi: 0.4 };
        let Some(cert) = is_typical(&x, &v, params.delta, params.epsilon).unwrap().certificate().cloned() else {
            return Ok(());
        };
        let Ok(spec) = build_hidden(&x, &v, &b, params, &cert) else {
            return Ok(());
        };
        prop_assert!(spec.b.is_irreducible() && v.contains(&spec.b, 1e-9));
        prop_assert_eq!(spec.total_length(), x.transitions());
        for laws in &spec.entry {
            for (u, law) in laws.iter().enumerate() {
                let total: f64 = law.iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-9, "entry law from {} sums to {}", u, total);
            }
        }
        let real = simulate_hidden(&spec, &mut seqchain::simulator::trial_rng(seed, 0));
        prop_assert_eq!(real.omega.len(), x.transitions() + 1);
        for (n, pair) in real.omega.windows(2).enumerate() {
            let law = spec.transition_law(spec.piece_for_transition(n), pair[0]);
            prop_assert!(law.iter().any(|&(w, p)| w == pair[1] && p > 0.0), "step {} leaves the support", n);
        }
    }
}

#[test]
fn identity_kernel_is_not_irreducible() {
    assert!(!TransitionMatrix::identity(3).is_irreducible());
    assert!(ExactChain::from_weights(&[vec![1, 1], vec![1, 0]]).is_irreducible());
}
