//! Sweep `P` for the pendulum, check convexity and build the Legendre dual.

use evans_kam::effective::{
    biconjugate_deviation, convexity_check, default_q_grid, fenchel_young_gap, legendre_transform, rotation_consistency,
    sweep_p, uniform_points, MomentumGrid, SweepMode,
};
use evans_kam::mather::critical_momentum;
use evans_kam::{MechanicalHamiltonian, SolverConfig, TorusGrid};

fn main() -> evans_kam::Result<()> {
    let grid = TorusGrid::new(1, 64, 8)?;
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let momenta = MomentumGrid::line(uniform_points(-2.0, 2.0, 0.1)?);
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let table = sweep_p(&grid, &ham, &SolverConfig::default().with_k(16.0), &momenta, SweepMode::Parallel { jobs })?;

    let p_star = critical_momentum(&ham.v)?;
    println!("critical momentum {p_star:.6}");
    for (i, p) in table.p.iter().enumerate().step_by(5) {
        println!("P = {:5.2}  hbar = {:.6}  Q = {:.6}", p[0], table.hbar[i], table.q[i][0]);
    }

    let convexity = convexity_check(&table.hbar);
    println!("convexity: max violation {:.1e}, margin {:.1e}", convexity.max_violation, convexity.margin);
    let rotation = rotation_consistency(&table)?;
    println!("max |Q - dH/dP| {:.2e}", rotation.max_discrepancy);

    let q_grid = default_q_grid(&table);
    let legendre = legendre_transform(&table, &q_grid)?;
    println!("min Fenchel-Young gap {:.1e}", fenchel_young_gap(&table, &legendre));
    println!("biconjugate deviation {:.1e}", biconjugate_deviation(&table, &legendre));

    let path = std::env::temp_dir().join("pendulum_effective.csv");
    table.write_csv(&mut std::fs::File::create(&path)?)?;
    println!("table written to {}", path.display());
    Ok(())
}
