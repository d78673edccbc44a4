//! Cross-ratios a and b, their distortion under a map, and a distortion product along an orbit.

use multicrit::circlemap::{build_sine_family, tune_omega, TuneOptions};
use multicrit::crossratio::{
    a_from_lengths, b_from_lengths, cri_audit, distortion, level_pair, poincare_log_b, NestedPair,
};
use multicrit::num::{golden, real};
use multicrit::partition::Skeleton;

fn main() -> multicrit::Result<()> {
    let p = 256;
    let (l, m, r) = (real(p, 0.2), real(p, 0.5), real(p, 0.3));
    let a = a_from_lengths(&l, &m, &r)?;
    let b = b_from_lengths(&l, &m, &r)?;
    let recip = real(p, 1) / &b;
    println!(
        "a = {:.15}, b = {:.15}, 1/b - (1 + a) = {:.3e}",
        a.to_f64(),
        b.to_f64(),
        (recip - a - 1u32).to_f64()
    );
    let (t0, m0, m1, t1) = (real(p, 0.0), real(p, 0.2), real(p, 0.7), real(p, 1.0));
    println!(
        "log b = {:.15}, Poincaré integral = {:.15}",
        b.clone().ln().to_f64(),
        poincare_log_b(&t0, &m0, &m1, &t1).to_f64()
    );

    let f = tune_omega(
        &build_sine_family(1, &real(p, 0), p)?,
        &golden(p),
        &TuneOptions {
            tol: 1e-40,
            max_iterates: 5000,
        },
    )?;
    let pair = NestedPair::from_points(
        &real(p, 0.30),
        &real(p, 0.32),
        &real(p, 0.34),
        &real(p, 0.36),
    )?;
    println!(
        "one-step distortion of b on [0.30, 0.36]: {:.12}",
        distortion(&f, 1, &pair)?.to_f64()
    );

    let n = 6;
    let sk = Skeleton::for_level(&f, 0, n)?;
    let audit = cri_audit(&f, &[(level_pair(&sk, n)?, sk.q(n) as usize)])?;
    println!(
        "level {n} pair pushed {} steps: product {:.6}, multiplicity {}, per-layer constant {:.6}",
        audit.factors,
        audit.product.to_f64(),
        audit.multiplicity,
        audit.fitted_c
    );
    Ok(())
}
