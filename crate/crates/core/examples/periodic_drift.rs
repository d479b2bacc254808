//! Purely time-dependent drift `eta = cos(2 pi t)`: the solver recovers the
//! closed forms `hbar = P^2/2 + 1/4` and `u = -sin(2 pi t) P/(2 pi) - sin(4 pi t)/(16 pi)`.

use std::f64::consts::PI;

use evans_kam::{solve, MechanicalHamiltonian, ScalarField, SolverConfig, TorusGrid};

fn main() -> evans_kam::Result<()> {
    let grid = TorusGrid::new(1, 16, 32)?;
    let ham = MechanicalHamiltonian::periodic_drift(1.0);
    for p in [-1.0, 0.0, 0.5, 1.0] {
        let r = solve(&grid, &ham, &SolverConfig::default().with_k(8.0).with_momentum(vec![p]))?;
        let exact = ScalarField::from_fn(&grid, |z| -(2.0 * PI * z[1]).sin() * p / (2.0 * PI) - (4.0 * PI * z[1]).sin() / (16.0 * PI));
        println!(
            "P = {p:5.2}  hbar = {:.12}  expected {:.12}  max|u - u*| = {:.1e}",
            r.hbar,
            0.5 * p * p + 0.25,
            r.u.max_abs_diff(&exact)?
        );
    }
    Ok(())
}
