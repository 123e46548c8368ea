//! Typicality of a sequence with respect to per-state polyhedra.

use seqchain::constrained::{is_typical, Polyhedron, ProductPolyhedron};
use seqchain::{Alphabet, ObservedSequence};

fn main() -> seqchain::Result<()> {
    let ab = Alphabet::new(["a", "b"])?;
    let v = ProductPolyhedron::new(
        ab.clone(),
        vec![
            Polyhedron::new(vec![vec![0.6, 0.4], vec![0.9, 0.1]])?,
            Polyhedron::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]])?,
        ],
    )?;
    let x = ObservedSequence::parse("a a a a b a a a a b b b a")?;
    for eps in [0.05, 0.2, 0.4] {
        match is_typical(&x, &v, 0.3, eps)?.certificate() {
            Some(cert) => println!("eps = {eps}: typical, kernel {:?}", cert.v.to_rows()),
            None => println!("eps = {eps}: not typical"),
        }
    }

    // a constant sequence cannot come from fair coins
    let half = Polyhedron::singleton(vec![0.5, 0.5])?;
    let coin = ProductPolyhedron::new(ab.clone(), vec![half.clone(), half])?;
    let constant = ObservedSequence::with_alphabet(&ab, std::iter::repeat_n("a", 1001))?;
    println!("constant sequence: {:?}", is_typical(&constant, &coin, 0.5, 0.3)?);
    Ok(())
}
