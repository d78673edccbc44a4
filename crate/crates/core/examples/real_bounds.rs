//! The adjacency constant C_n of the dynamical partitions of the unicritical and bicritical sine families.

use multicrit::acceptance::{real_bounds_series, stability};

fn main() -> multicrit::Result<()> {
    for m in [1, 2] {
        let series = real_bounds_series(m, 2..=10)?;
        let cs: Vec<String> = series
            .iter()
            .map(|(n, c)| format!("C_{n}={c:.3}"))
            .collect();
        println!("m={m}: {}", cs.join(" "));
        println!(
            "      largest level-to-level change {:.1}% of the running max",
            100.0 * stability(&series)
        );
    }
    Ok(())
}
