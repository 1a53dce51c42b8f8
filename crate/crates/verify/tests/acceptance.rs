//! Runs every acceptance criterion at its stated tolerance and runtime budget,
//! printing one PASS/FAIL line per criterion.
//!
//! `cargo test -p steiner-verify --test acceptance [-- NAME...]` runs a subset
//! by check name or number.

use std::process::ExitCode;

use steiner_verify::{registry, run};

const SEED: u64 = 20240611;

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = registry()
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| *f == c.name || *f == c.id.to_string()))
        .collect();
    println!("running {} acceptance checks", selected.len());
    let mut failed = 0;
    for check in selected {
        let outcome = run(check, SEED);
        println!("{}", outcome.summary_line());
        for (k, v) in &outcome.metrics {
            println!("         {k} = {v:.6e}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance checks passed");
        ExitCode::SUCCESS
    }
}
