//! Strongly forced case at large `k`: the unregularized Newton iteration
//! stalls where `m` is tiny; a small Tikhonov term restores convergence at a
//! bias of order `epsilon`.

use evans_kam::{solve, FourierSpec, MechanicalHamiltonian, SolverConfig, TorusGrid};

fn main() -> evans_kam::Result<()> {
    let grid = TorusGrid::new(1, 64, 64)?;
    let eta = vec![FourierSpec::sine(vec![1], 0.5)];
    let v = FourierSpec::cosine(vec![1, 0], 1.0).plus(FourierSpec::cosine(vec![1, -1], 0.5));
    let ham = MechanicalHamiltonian::new(1, eta, v)?;
    for epsilon in [0.0, 1e-4, 1e-3] {
        let config = SolverConfig {
            epsilon,
            ..SolverConfig::default().with_k(8.0)
        };
        let r = solve(&grid, &ham, &config)?;
        println!(
            "epsilon = {epsilon:.0e}  converged = {}  iterations = {}  |g| = {:.1e}  hbar = {:.8}",
            r.converged, r.iterations, r.grad_norm, r.hbar
        );
    }
    Ok(())
}
