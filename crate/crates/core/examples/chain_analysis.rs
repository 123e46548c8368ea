//! Hitting times, watched chains and mixing statistics of a small kernel.

use seqchain::{StateSet, TransitionMatrix};

fn main() -> seqchain::Result<()> {
    let p = TransitionMatrix::new(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.6, 0.4, 0.0]])?;
    let mu = p.invariant_measure()?;
    println!("mu = {:?}", mu.weights);
    println!("gamma* = {}", p.gamma_mixing_constant()?);
    for s in 0..3 {
        println!(
            "E_{s}[T_{s}^+] = {:.6} (1/mu = {:.6})",
            p.expected_return_time(s)?,
            1.0 / mu.get(s)
        );
    }

    let c = StateSet::from_states([0, 1]);
    let watched = p.watched_chain(c)?;
    println!("watched on {{0,1}}: {:?}", watched.to_rows());
    println!("entry law from 2: {:?}", p.hit_equality_distribution(2, c)?);

    let m = p.mixing_stats(c)?;
    println!(
        "lambda = {:.4}, rho = {:.4}, K = {:.4}, zeta = {:.4}",
        m.lambda, m.rho, m.visit_len, m.conductance
    );
    Ok(())
}
