//! Reading a map from a configuration file.

use multicrit::config::MapSpec;
use multicrit::num::to_decimal;

const TEXT: &str = "
[family]
kind = canonical
precision = 128

[critical.0]
position = 0
exponent = 3
window = 0.1

[critical.1]
position = 0.45
exponent = 5     # quintic
window = 0.1

[tuning]
target_rho = [2,1,3]   # continued with golden quotients
budget = 2000
";

fn main() -> multicrit::Result<()> {
    let spec = MapSpec::parse(TEXT)?;
    let f = spec.build()?;
    println!(
        "{} map with {} critical points",
        f.kind_name(),
        f.n_critical()
    );
    println!("ω = {}", to_decimal(&f.omega, 25));
    println!("combinatorics {:?}", f.combinatorics()?.partial_quotients);
    Ok(())
}
