//! The piecewise chain of a two-block sequence, and why the homogeneous
//! chain with the same observed kernel fails to reproduce its occupancy.

use seqchain::approximator::{build_basic, two_block_sequence, PiecewiseChain};
use seqchain::simulator::{verify_b1, verify_b2};

fn main() -> seqchain::Result<()> {
    let x = two_block_sequence(1000);
    let basic = build_basic(&x, 0.1)?;
    let x_star = basic.x_star_sequence();
    print!(
        "{}",
        basic
            .chain
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("row"))
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();

    let b2 = verify_b2(&basic.chain, &x_star, 0.1);
    println!("structural deviation {:.2e}", b2.max_deviation);

    let b1 = verify_b1(&basic.chain, &x_star, 0.1, 0.1, 0.1, 2000, 7)?;
    println!("piecewise: worst deviation frequency {}", b1.max_qualifying_frequency());

    let naive = PiecewiseChain::homogeneous(x.alphabet().clone(), basic.p_star.clone(), x_star.transitions(), 0);
    let contrast = verify_b1(&naive, &x_star, 0.1, 0.1, 0.1, 2000, 7)?;
    println!(
        "homogeneous: worst deviation frequency {}",
        contrast.max_qualifying_frequency()
    );
    Ok(())
}
