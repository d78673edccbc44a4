//! Invariant-measure gaps between critical points, and tuning a critical point to match a given gap.

use multicrit::circlemap::{
    build_piecewise_canonical, tune_omega, CriticalSpec, MapModel, TuneOptions,
};
use multicrit::conjugacy::{match_gap, measure_bracket, measure_match_check, signature};
use multicrit::num::{golden, real};

fn bicritical(c1: f64) -> multicrit::Result<MapModel> {
    let p = 128;
    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, 0.08)),
        slope: None,
    };
    let m = build_piecewise_canonical(&[spec(0.0), spec(c1)], &real(p, 0), p)?;
    tune_omega(
        &m,
        &golden(p),
        &TuneOptions {
            tol: 1e-30,
            max_iterates: 3000,
        },
    )
}

fn main() -> multicrit::Result<()> {
    let samples = 4181;
    let f = bicritical(0.5)?;
    let s = signature(&f, samples)?;
    println!(
        "f: gaps {:?}",
        s.gaps
            .iter()
            .map(|g| format!("{:.4}±{:.1e}", g.value, g.spread))
            .collect::<Vec<_>>()
    );

    let g = bicritical(0.35)?;
    let rep = measure_match_check(&f, &g, samples)?;
    println!(
        "g with c₁ = 0.35: matched {} (deltas {:?})",
        rep.matched, rep.deltas
    );

    let (lo, hi) = measure_bracket(&f, &f.critical[1].position, samples)?;
    let target = 0.5 * (lo + hi);
    let found = match_gap(bicritical, (0.3, 0.7), target, 1e-3, samples, 20)?;
    println!(
        "c₁ = {:.6} matches λ₀ = {target:.6} after {} steps, bracket {:?}",
        found.parameter, found.steps, found.bracket
    );
    Ok(())
}
