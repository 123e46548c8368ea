//! Structure partitions of a sequence at increasing run thresholds.

use seqchain::partition::{structure_partition, verify_partition};
use seqchain::ObservedSequence;

fn main() -> seqchain::Result<()> {
    // two sticky blocks {a,b} and {c,d} with fast switching inside each
    let block = |u: &str, v: &str| format!("{u} {v} ").repeat(40);
    let text = [block("a", "b"), block("c", "d"), block("a", "b"), block("c", "d")].concat() + "a";
    let x = ObservedSequence::parse(&text)?;

    for a in [0.5, 2.0, 10.0, 200.0] {
        let p = structure_partition(&x, a)?;
        let check = verify_partition(&x, &p);
        let atoms: Vec<String> = p.atoms.iter().map(|&c| x.alphabet().format_subset(c)).collect();
        println!(
            "a = {a:>5}: atoms {} runs {:?} (few runs: {}, no cheap split: {})",
            atoms.join(" "),
            check.run_counts,
            check.p1_ok,
            check.p2_ok
        );
    }
    Ok(())
}
