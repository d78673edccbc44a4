//! Critical spots and bridges of the auxiliary partition for a map with two critical points.

use multicrit::circlemap::{build_sine_family, tune_omega, TuneOptions};
use multicrit::num::real;
use multicrit::partition::{
    build_aux_partition, partition_csv, spot_and_bridge_size_check, AtomKind,
};
use multicrit::rotation::ContinuedFraction;

fn main() -> multicrit::Result<()> {
    let p = 128;
    // a_3 = 12 gives a level-2 return with room for both critical points.
    let rho = ContinuedFraction::from_quotients(&[1, 1, 1, 12])?.value_with_golden_tail(p);
    let f = tune_omega(
        &build_sine_family(2, &real(p, 0), p)?,
        &rho,
        &TuneOptions {
            tol: 1e-30,
            max_iterates: 5000,
        },
    )?;
    let n = 2;
    let aux = build_aux_partition(&f, n)?;
    let rep = spot_and_bridge_size_check(&aux);
    println!(
        "level {n}: a = {}, critical times {:?}",
        aux.a, aux.critical_times
    );
    println!(
        "  {} spot atoms and {} bridge atoms over {} images, {} deep, {} short",
        aux.count(AtomKind::Spot),
        aux.count(AtomKind::Bridge),
        aux.q_next,
        aux.count(AtomKind::Deep),
        aux.count(AtomKind::Short)
    );
    println!(
        "  spot/|I_n| {:?}",
        rep.spot_ratios
            .iter()
            .map(|r| format!("{r:.3}"))
            .collect::<Vec<_>>()
    );
    println!(
        "  bridge/|I_n| {:?}",
        rep.bridge_ratios
            .iter()
            .map(|r| r.map(|v| format!("{v:.3}")))
            .collect::<Vec<_>>()
    );
    println!(
        "  consecutive atoms within factor {:.3}",
        rep.consecutive.constant
    );
    print!(
        "{}",
        partition_csv(n, &aux.atoms, 12, "auxiliary partition: spots and bridges")
    );
    Ok(())
}
