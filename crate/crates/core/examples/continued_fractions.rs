//! Continued fractions of a rotation number and the closest returns of the rigid rotation.

use multicrit::circlemap::build_rotation;
use multicrit::num::golden;
use multicrit::partition::{adjacency_report, build_partition};
use multicrit::rotation::{expand, ContinuedFraction};

fn main() -> multicrit::Result<()> {
    let p = 256;
    let rho = golden(p);
    let cf = expand(&rho, 12)?;
    println!("golden mean quotients {:?}", cf.partial_quotients);
    for n in 0..cf.depth() {
        println!("  p_{n}/q_{n} = {}/{}", cf.p(n), cf.q(n));
    }

    let long = ContinuedFraction::from_quotients(&[1, 1, 1, 40])?;
    println!(
        "[1,1,1,40] q_n = {:?}",
        (0..long.depth()).map(|n| long.q(n)).collect::<Vec<_>>()
    );

    // The rotation's partition atoms have exactly two lengths.
    let r = build_rotation(&rho, p)?;
    for n in [4, 8, 12] {
        let part = build_partition(&r, 0, n)?;
        let rep = adjacency_report(&part);
        println!(
            "level {n}: {} long + {} short atoms, worst neighbour ratio {:.6}",
            part.long_count(),
            part.short_count(),
            rep.max_ratio
        );
    }
    Ok(())
}
