//! Atom lengths along a long bridge against the 1/ord² law, and a balanced decomposition.

use multicrit::acceptance::long_bridge_lengths;
use multicrit::parabolic::{balanced_decomposition, order, yoccoz_fit};

fn main() -> multicrit::Result<()> {
    let lens = long_bridge_lengths(256)?;
    let fit = yoccoz_fit(&lens)?;
    println!(
        "chain of {} atoms: log-log slope {:.3}, C_σ {:.2}",
        lens.len(),
        fit.slope,
        fit.c_sigma
    );

    let ell = 40;
    let model: Vec<f64> = (1..=ell)
        .map(|nu| 1.0 / (order(nu, ell) as f64).powi(2))
        .collect();
    println!(
        "exact 1/ord² model with ℓ={ell}: slope {:.12}",
        yoccoz_fit(&model)?.slope
    );

    let dec = balanced_decomposition(20)?;
    println!("balanced decomposition of ℓ=20 (depth {}):", dec.depth);
    println!("  pieces {:?}", dec.pieces());
    println!("  exact tiling: {}", dec.is_exact_tiling());
    Ok(())
}
