//! Building critical circle maps, tuning ω to a rotation number and checking the power law near each critical point.

use multicrit::circlemap::{
    build_piecewise_canonical, build_sine_family, power_law_diagnostics, tune_omega, CriticalSpec,
    TuneOptions,
};
use multicrit::num::{golden, real, to_decimal};

fn main() -> multicrit::Result<()> {
    let p = 128;
    let opts = TuneOptions {
        tol: 1e-30,
        max_iterates: 5000,
    };

    let sine = tune_omega(&build_sine_family(2, &real(p, 0), p)?, &golden(p), &opts)?;
    println!(
        "bicritical sine family tuned to the golden mean: ω = {}",
        to_decimal(&sine.omega, 30)
    );
    println!(
        "  certified orbit length {}",
        sine.certified_orbit_length().unwrap_or(0)
    );

    let spec = |c: f64| CriticalSpec {
        position: real(p, c),
        exponent: real(p, 3),
        half_width: Some(real(p, 0.1)),
        slope: None,
    };
    let canon = tune_omega(
        &build_piecewise_canonical(&[spec(0.0), spec(0.3)], &real(p, 0), p)?,
        &golden(p),
        &opts,
    )?;
    println!(
        "canonical map with critical points at 0 and 0.3: ω = {}",
        to_decimal(&canon.omega, 30)
    );
    for r in power_law_diagnostics(&canon) {
        println!(
            "  critical point {}: f'(x)/|x-c|^2 in [{:.4}, {:.4}], log-log slope {:.4}",
            r.index, r.alpha, r.beta, r.log_slope
        );
    }
    println!(
        "  Schwarzian at 0.2: {:.6}",
        canon.schwarzian(&real(p, 0.2))?.to_f64()
    );
    Ok(())
}
