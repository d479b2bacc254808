//! Runs the built-in invariant checks on random band-limited data.

use evans_kam::check::{run_checks, CheckOptions};

fn main() -> evans_kam::Result<()> {
    let report = run_checks(&CheckOptions { seed: 2024, ..CheckOptions::default() })?;
    for c in &report.checks {
        println!("{} {:<26} {:.3e} (tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("all passed: {}", report.passed());
    Ok(())
}
