//! Acceptance criteria, one line each. Exits nonzero if any fails.

use fdlab::harness::acceptance::{run_acceptance, AcceptanceOptions};

fn main() {
    let summary = run_acceptance(&AcceptanceOptions::default());
    for line in summary.lines() {
        println!("{line}");
    }
    let passed = summary.criteria.iter().filter(|c| c.passed).count();
    println!("acceptance: {passed}/{} criteria passed", summary.criteria.len());
    if !summary.passed {
        std::process::exit(1);
    }
}
