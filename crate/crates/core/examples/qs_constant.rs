//! The quasisymmetry constant obtained from isomorphic fine grids.

use multicrit::circlemap::{build_sine_family, tune_omega, TuneOptions};
use multicrit::conjugacy::{grid_criterion, qs_constant};
use multicrit::finegrid::{build_grid, DEFAULT_SN_THRESHOLD};
use multicrit::num::{golden, real};
use rug::Rational;

fn main() -> multicrit::Result<()> {
    let k = qs_constant(7, &Rational::from(2), &Rational::from((1, 2)))?;
    println!(
        "a=7, ρ=2, λ=1/2: α = {}, β = {}, ρ₁ = {}, p = {}",
        k.alpha, k.beta, k.rho1, k.p
    );

    let p = 128;
    let f = tune_omega(
        &build_sine_family(1, &real(p, 0), p)?,
        &golden(p),
        &TuneOptions {
            tol: 1e-30,
            max_iterates: 1000,
        },
    )?;
    let g = build_grid(&f, 3, DEFAULT_SN_THRESHOLD)?;
    let c = grid_criterion(&g, &g)?;
    println!(
        "identity conjugacy: observed λ = {}, constant triple {:?}",
        c.lambda_observed,
        c.constant.triple()
    );
    Ok(())
}
