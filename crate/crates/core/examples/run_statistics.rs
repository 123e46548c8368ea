//! Occupancy, observed transition matrix and run counts of a short sequence.

use seqchain::{ObservedSequence, StateSet};

fn main() -> seqchain::Result<()> {
    let x = ObservedSequence::parse("#alphabet: a b c\na a b a c c c b a a")?;
    let counts = x.count_transitions();
    let observed = counts.observed_transition_matrix();

    println!(
        "N = {}, exhaustive = {}, periodic = {}",
        x.transitions(),
        x.is_exhaustive(),
        x.is_periodic()
    );
    for (s, sym) in x.alphabet().symbols().iter().enumerate() {
        println!(
            "{sym}: nu = {:.3}, p(row) = {:?}",
            counts.occupancy().get(s),
            observed.matrix.row(s)
        );
    }

    let n = x.num_states();
    for bits in 1..(1u64 << n) {
        let c = StateSet::from_bits(bits);
        println!(
            "R_{} = {} (complement: {})",
            x.alphabet().format_subset(c),
            x.run_count(c),
            x.run_count(c.complement(n))
        );
    }

    let star = x.periodicize_exhaustify();
    println!("extension: {}", star.to_text().trim_end());
    Ok(())
}
