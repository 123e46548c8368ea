//! Occupancy deviations of a mixing chain against the `17γ/(nε²)` bound.

use seqchain::simulator::theorem3_experiment;
use seqchain::TransitionMatrix;

fn main() -> seqchain::Result<()> {
    let p = TransitionMatrix::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]])?;
    for (n, eps) in [(200, 0.4), (2_000, 0.2), (10_000, 0.2)] {
        let r = theorem3_experiment(&p, n, eps, 0, 2000, 3)?;
        println!(
            "n = {n:>6}, eps = {eps}: bound {:.4}{}, frequencies {:?}",
            r.bound,
            if r.vacuous { " (vacuous)" } else { "" },
            r.frequencies
        );
    }
    Ok(())
}
