//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;

use fibred_hodge::runner::acceptance::Suite;

fn main() -> ExitCode {
    let seed = std::env::var("FIBRED_HODGE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut suite = Suite::new(seed);
    let mut failed = 0;
    for id in 1..=10 {
        let o = suite.run(id);
        println!("{}", o.line());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
