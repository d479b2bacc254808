//! Certification of a solve against the mean-field-game system
//!
//! ```text
//! u_t + H(z, P + grad u) = (1/k) log m + hbar
//! m_t + div(H_p m) = 0,   mean u = 0,   mean m = 1
//! ```
//!
//! and the min-max upper bound `max_z (u_t + H(z, P + grad u))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::{EvansSolver, SolveResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfgResidualReport {
    /// `max |u_t + H - (1/k) log m - hbar|`.
    pub hjb_residual: f64,
    /// `L^2` norm of `m_t + div(H_p m)`.
    pub transport_residual: f64,
    pub mean_u: f64,
    pub mass_m: f64,
    /// `max (u_t + H - hbar)`.
    pub sup_excess: f64,
}

impl MfgResidualReport {
    pub const CSV_HEADER: [&'static str; 5] = ["hjb_residual", "transport_residual", "mean_u", "mass_m", "sup_excess"];

    pub fn csv_row(&self) -> [String; 5] {
        [
            format!("{:?}", self.hjb_residual),
            format!("{:?}", self.transport_residual),
            format!("{:?}", self.mean_u),
            format!("{:?}", self.mass_m),
            format!("{:?}", self.sup_excess),
        ]
    }
}

fn check_result(solver: &EvansSolver, result: &SolveResult) -> Result<()> {
    if result.u.grid() != solver.grid() || result.m.grid() != solver.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub fn mfg_residuals(solver: &EvansSolver, result: &SolveResult) -> Result<MfgResidualReport> {
    check_result(solver, result)?;
    let grid = solver.grid();
    let k = solver.k();
    let state = solver.state(result.u.values(), solver.hamiltonian().lambda);
    let m = result.m.values();
    let hjb_residual = state
        .f
        .iter()
        .zip(m)
        .filter(|(_, &mi)| mi > 0.0)
        .map(|(fi, mi)| (fi - mi.ln() / k - result.hbar).abs())
        .fold(0.0, f64::max);
    // the transport residual is evaluated with the stored density
    let mut probe = state;
    probe.m = m.to_vec();
    let residual = solver.transport_gradient(&probe);
    let sup_excess = probe.f.iter().map(|fi| fi - result.hbar).fold(f64::NEG_INFINITY, f64::max);
    Ok(MfgResidualReport {
        hjb_residual,
        transport_residual: grid.norm(&residual),
        mean_u: result.u.integrate(),
        mass_m: result.m.integrate(),
        sup_excess,
    })
}

/// `max_z u_t + H(z, P + grad u)` for any candidate `u`, using the solver's
/// Hamiltonian and momentum.
pub fn minmax_upper_bound(solver: &EvansSolver, u: &ScalarField) -> Result<f64> {
    if u.grid() != solver.grid() {
        return Err(Error::GridMismatch);
    }
    solver.grid().check_values(u.values())?;
    let state = solver.state(u.values(), solver.hamiltonian().lambda);
    Ok(state.f.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::hamiltonian::MechanicalHamiltonian;
    use crate::solver::SolverConfig;

    #[test]
    fn trivial_solve_is_certified() {
        let grid = TorusGrid::new(1, 16, 16).unwrap();
        let s = EvansSolver::new(&grid, &MechanicalHamiltonian::free(1), &SolverConfig::default()).unwrap();
        let r = s.minimize(None).unwrap();
        let rep = mfg_residuals(&s, &r).unwrap();
        assert!(rep.hjb_residual <= 1e-12);
        assert!(rep.transport_residual <= 1e-12);
        assert_eq!(rep.sup_excess, 0.0);
        assert_eq!(rep.mass_m, 1.0);
    }

    #[test]
    fn minmax_of_zero_field() {
        let grid = TorusGrid::new(1, 16, 4).unwrap();
        let s = EvansSolver::new(&grid, &MechanicalHamiltonian::pendulum(1.0), &SolverConfig::default()).unwrap();
        assert_eq!(minmax_upper_bound(&s, &ScalarField::zeros(&grid)).unwrap(), 1.0);
        let cfg = SolverConfig::default().with_momentum(vec![-0.8]);
        let s = EvansSolver::new(&grid, &MechanicalHamiltonian::free(1), &cfg).unwrap();
        assert!((minmax_upper_bound(&s, &ScalarField::zeros(&grid)).unwrap() - 0.32).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let grid = TorusGrid::new(1, 16, 4).unwrap();
        let s = EvansSolver::new(&grid, &MechanicalHamiltonian::pendulum(1.0), &SolverConfig::default()).unwrap();
        let other = TorusGrid::new(1, 8, 4).unwrap();
        assert!(matches!(minmax_upper_bound(&s, &ScalarField::zeros(&other)), Err(Error::GridMismatch)));
    }
}
