//! Single solve for the pendulum with residuals, Mather diagnostics and the
//! Lipschitz certificate.

use evans_kam::diagnostics::{mfg_residuals, minmax_upper_bound};
use evans_kam::io::{save_field, FieldFormat};
use evans_kam::mather::mather_diagnostics;
use evans_kam::{EvansSolver, MechanicalHamiltonian, SolverConfig, TorusGrid};

fn main() -> evans_kam::Result<()> {
    let grid = TorusGrid::new(1, 64, 16)?;
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let solver = EvansSolver::new(&grid, &ham, &SolverConfig::default().with_k(16.0).with_momentum(vec![1.5]))?;
    let result = solver.minimize(None)?;
    println!(
        "hbar = {:.10}  converged = {}  iterations = {}  |g| = {:.2e}",
        result.hbar, result.converged, result.iterations, result.grad_norm
    );

    let (lo, hi) = solver.hbar_bounds();
    println!("bounds [{lo:.4}, {hi:.4}]  minmax upper bound {:.6}", minmax_upper_bound(&solver, &result.u)?);

    let res = mfg_residuals(&solver, &result)?;
    println!("hjb {:.1e}  transport {:.1e}  mass {:.15}", res.hjb_residual, res.transport_residual, res.mass_m);

    let mather = mather_diagnostics(&solver, &result)?;
    println!(
        "action {:.6}  S/k {:.3e}  rotation {:?}  identity gap {:.1e}",
        mather.action, mather.entropy_over_k, mather.rotation, mather.identity_gap
    );

    let cert = solver.lipschitz_certificate()?;
    println!("|Du| = {:.4} <= K = {:.4}", result.lip_norm, cert.bound);

    let path = std::env::temp_dir().join("pendulum_u.csv");
    save_field(&result.u, &path, FieldFormat::Csv)?;
    println!("u written to {}", path.display());
    Ok(())
}
