//! Behaviour as `k` grows: `hbar_k` approaches the exact pendulum value and
//! `S/k` vanishes.

use evans_kam::mather::k_sweep;
use evans_kam::{MechanicalHamiltonian, SolverConfig, TorusGrid};

fn main() -> evans_kam::Result<()> {
    let grid = TorusGrid::new(1, 128, 8)?;
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let report = k_sweep(&grid, &ham, &SolverConfig::default().with_momentum(vec![1.5]), &[4.0, 8.0, 16.0, 32.0, 64.0])?;
    let reference = report.hbar_ref.unwrap_or(f64::NAN);
    println!("reference hbar {reference:.8}");
    for row in &report.rows {
        println!(
            "k = {:4}  hbar = {:.8}  gap = {:.2e}  S/k = {:.2e}  |Du| = {:.4}  aronsson = {:.2e}",
            row.k,
            row.hbar,
            row.hbar - reference,
            row.entropy_over_k,
            row.lip_norm,
            row.aronsson_residual
        );
    }
    Ok(())
}
