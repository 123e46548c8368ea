//! V-processes under three vertex policies: counting statistics, the
//! per-vertex concentration check and the typical fraction.

use seqchain::constrained::{Polyhedron, ProductPolyhedron};
use seqchain::simulator::{simulate_v_process, theorem5_estimate, trial_rng, tstar_check, VProcessPolicy};
use seqchain::Alphabet;

fn main() -> seqchain::Result<()> {
    let v = ProductPolyhedron::new(
        Alphabet::new(["a", "b"])?,
        vec![
            Polyhedron::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]])?,
            Polyhedron::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]])?,
        ],
    )?;
    let policies = [
        ("fixed", VProcessPolicy::Fixed(vec![vec![0.5, 0.5], vec![0.9, 0.1]])),
        ("iid", VProcessPolicy::Iid),
        ("cycling", VProcessPolicy::Cycling),
    ];
    for (name, policy) in &policies {
        let real = simulate_v_process(&v, policy, 100_000, 0, &mut trial_rng(1, 0));
        let t = tstar_check(&real, &v, 0.5, 0.1);
        let u = real.average_point(0, &v).expect("a is visited");
        let frac = theorem5_estimate(&v, policy, 20_000, 0.5, 0.2, 20, 4)?;
        println!(
            "{name:>7}: u(a) = [{:.3}, {:.3}], concentration holds: {}, typical {}/{}",
            u[0], u[1], t.holds, frac.typical, frac.realizations
        );
    }
    Ok(())
}
