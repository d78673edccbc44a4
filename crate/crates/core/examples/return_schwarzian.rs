//! The Schwarzian of first-return maps on bridge atoms, from the chain rule and from finite differences.

use multicrit::circlemap::{build_sine_family, tune_omega, TuneOptions};
use multicrit::num::real;
use multicrit::parabolic::{
    detect_almost_parabolic, fd_schwarzian, return_schwarzian, SAMPLES_PER_ATOM,
};
use multicrit::partition::{aux_from, Skeleton};
use multicrit::rotation::ContinuedFraction;

fn main() -> multicrit::Result<()> {
    let p = 256;
    let rho = ContinuedFraction::from_quotients(&[5; 8])?.value_with_golden_tail(p);
    let f = tune_omega(
        &build_sine_family(1, &real(p, 0), p)?,
        &rho,
        &TuneOptions {
            tol: 1e-40,
            max_iterates: 20_000,
        },
    )?;
    let top = 4;
    let sk = Skeleton::for_level(&f, 0, top)?;
    for n in 1..=top {
        let aux = aux_from(&f, &sk, n)?;
        for i in 0..=aux.r() {
            let Some(ch) = detect_almost_parabolic(&f, &sk, &aux, i, SAMPLES_PER_ATOM)? else {
                continue;
            };
            let x = ch.atoms[ch.atoms.len() / 2].midpoint();
            let rs = return_schwarzian(&f, ch.q as usize, &x)?;
            let fd = fd_schwarzian(
                |y| f.iterate_lift(y, ch.q),
                &x,
                ch.atoms[0].len_f64() * 1e-2,
            );
            println!(
                "level {n} bridge {i}: {} atoms, return time {}, S(f^q) = {:.6e} (finite differences {:.6e}), window share {:.2}, negative on {:.0}% of {} samples",
                ch.len(),
                ch.q,
                rs.total.to_f64(),
                fd,
                rs.dominance(),
                100.0 * ch.negative_fraction,
                ch.samples
            );
        }
    }
    Ok(())
}
