//! Build the hidden chain of a sequence under polyhedral constraints and
//! count the steps where its visible law strays from the observed one.

use seqchain::constrained::{
    build_hidden, find_irreducible_b, is_typical, HiddenParams, Polyhedron, ProductPolyhedron,
};
use seqchain::simulator::{count_n0, simulate_hidden, trial_rng};
use seqchain::{Alphabet, ObservedSequence};

fn main() -> seqchain::Result<()> {
    let v = ProductPolyhedron::new(
        Alphabet::new(["a", "b", "c"])?,
        vec![
            Polyhedron::new(vec![vec![0.7, 0.299, 0.001], vec![0.5, 0.499, 0.001]])?,
            Polyhedron::new(vec![vec![0.5, 0.5, 0.0], vec![0.3, 0.7, 0.0]])?,
            Polyhedron::new(vec![vec![0.001, 0.0, 0.999], vec![0.002, 0.0, 0.998]])?,
        ],
    )?;
    let b = find_irreducible_b(&v).expect("centroids are irreducible");

    // a path drawn from the centroid kernel is typical for V; c is entered
    // rarely and left rarely, so it gets a piece of its own
    let chain = seqchain::approximator::PiecewiseChain::homogeneous(v.alphabet.clone(), b.clone(), 20_000, 0);
    let path = seqchain::simulator::simulate_piecewise(&chain, &mut trial_rng(1, 0));
    let x = ObservedSequence::new(v.alphabet.clone(), path)?;

    let params = HiddenParams {
        epsilon: 0.2,
        delta: 0.2,
        delta_prime: 0.3,
        xi: 0.4,
    };
    let cert = is_typical(&x, &v, params.delta, params.epsilon)?
        .certificate()
        .cloned()
        .expect("typical");
    let spec = build_hidden(&x, &v, &b, params, &cert)?;
    for (atom, m) in spec.atoms.iter().zip(&spec.lengths) {
        println!("piece {} for {m} steps", v.alphabet.format_subset(*atom));
    }
    let real = simulate_hidden(&spec, &mut trial_rng(2, 0));
    println!("N_0 at eta = 0.1: {}", count_n0(&spec, &real.omega, 0.1));
    Ok(())
}
