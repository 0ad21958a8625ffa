//! One line per acceptance criterion. Runs without the libtest harness so the
//! lines show up in plain `cargo test` output.

use std::process::ExitCode;

use linfvar_core::checks;

/// Criteria that fail for a documented reason. They are still run and
/// reported as FAIL, but do not fail the target.
const KNOWN_FAILURES: &[usize] = &[4];

fn main() -> ExitCode {
    let outcomes = checks::run_all(0);
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|o| !o.passed && !KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let fixed: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.passed && KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    if !fixed.is_empty() {
        println!("note: criteria {fixed:?} are listed as known failures but passed");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
