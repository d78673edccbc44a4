//! Fine grids Q_1 … Q_n and their validation.

use multicrit::circlemap::{build_sine_family, tune_omega, TuneOptions};
use multicrit::finegrid::{build_grid, validate_grid, DEFAULT_SN_THRESHOLD};
use multicrit::num::{golden, real};

fn main() -> multicrit::Result<()> {
    let p = 256;
    for m in [1, 2] {
        let f = tune_omega(
            &build_sine_family(m, &real(p, 0), p)?,
            &golden(p),
            &TuneOptions {
                tol: 1e-40,
                max_iterates: 30_000,
            },
        )?;
        let g = build_grid(&f, 6, DEFAULT_SN_THRESHOLD)?;
        let r = validate_grid(&g)?;
        println!(
            "m={m}: atoms per level {:?}",
            g.levels.iter().map(|l| l.atoms.len()).collect::<Vec<_>>()
        );
        println!(
            "     children ≤ {} (bound {}), adjacent ratio {:.3}, child/parent in [{:.3}, {:.3}] ⊂ [{:.3}, {:.3}]",
            r.a_observed, r.children_bound, r.rho_observed, r.ratio_range.0, r.ratio_range.1, r.alpha, r.beta
        );
    }
    Ok(())
}
