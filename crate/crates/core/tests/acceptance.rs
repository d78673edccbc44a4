//! Runs the eight acceptance criteria and prints one line per criterion.
//! Extra arguments restrict the run to the listed criterion numbers.

use multicrit::acceptance::run;

fn main() {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<usize> = if only.is_empty() {
        (1..=8).collect()
    } else {
        only
    };
    let mut failed = 0;
    for id in ids {
        let o = run(id, 0);
        println!("{}", o.line());
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
