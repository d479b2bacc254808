use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use evans_kam::diagnostics::{mfg_residuals, minmax_upper_bound};
use evans_kam::effective::{legendre_transform, rotation_consistency, sweep_p, uniform_points, MomentumGrid, SweepMode};
use evans_kam::mather::{k_sweep, pendulum_reference};
use evans_kam::{solve, solve_k_continuation, DiffMethod, EvansSolver, FourierSpec, MechanicalHamiltonian, ScalarField, SolverConfig, TorusGrid};

fn line(values: &[f64]) -> MomentumGrid {
    MomentumGrid::line(values.to_vec())
}

#[test]
fn objective_closed_forms() {
    let grid = TorusGrid::new(1, 32, 16).unwrap();
    let free = MechanicalHamiltonian::free(1);
    let s = EvansSolver::new(&grid, &free, &SolverConfig::default().with_momentum(vec![0.6])).unwrap();
    let (j, m) = s.objective(&ScalarField::zeros(&grid)).unwrap();
    assert_abs_diff_eq!(j, 0.18, epsilon = 1e-15);
    assert!(m.values().iter().all(|&w| (w - 1.0).abs() < 1e-15));

    let drift = MechanicalHamiltonian::periodic_drift(1.0);
    let s = EvansSolver::new(&grid, &drift, &SolverConfig::default()).unwrap();
    let u = ScalarField::from_fn(&grid, |z| -(4.0 * PI * z[1]).sin() / (16.0 * PI));
    let (j, _) = s.objective(&u).unwrap();
    assert_abs_diff_eq!(j, 0.25, epsilon = 1e-14);
    let g = s.gradient(&u).unwrap();
    assert!(g.values().iter().all(|x| x.abs() <= 1e-10));
}

#[test]
fn pendulum_solve_respects_bounds() {
    let grid = TorusGrid::new(1, 64, 64).unwrap();
    let s = EvansSolver::new(&grid, &MechanicalHamiltonian::pendulum(1.0), &SolverConfig::default()).unwrap();
    let r = s.minimize(None).unwrap();
    assert!(r.converged && r.grad_norm <= 1e-8);
    assert!((-1.0..=1.0).contains(&r.hbar));
    let rep = mfg_residuals(&s, &r).unwrap();
    assert!(rep.transport_residual <= 1e-9);
    assert_abs_diff_eq!(rep.transport_residual, r.grad_norm, epsilon = 1e-15);
}

#[test]
fn central_differences_agree_with_spectral() {
    let grid = TorusGrid::new(1, 64, 8).unwrap();
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let cfg = SolverConfig::default().with_momentum(vec![1.5]);
    let spectral = solve(&grid, &ham, &cfg).unwrap();
    let central = solve(
        &grid,
        &ham,
        &SolverConfig {
            method: DiffMethod::Central4,
            ..cfg
        },
    )
    .unwrap();
    assert!(spectral.converged && central.converged);
    assert!((spectral.hbar - central.hbar).abs() < 1e-4);
}

#[test]
fn k_continuation_reaches_the_direct_answer() {
    let grid = TorusGrid::new(1, 64, 8).unwrap();
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let cfg = SolverConfig::default().with_k(32.0).with_momentum(vec![1.5]);
    let direct = solve(&grid, &ham, &cfg).unwrap();
    let staged = solve_k_continuation(&grid, &ham, &cfg, 4.0).unwrap();
    assert!(direct.converged && staged.converged);
    assert!((direct.hbar - staged.hbar).abs() <= 1e-9);
}

#[test]
fn minmax_bound_brackets_the_limit() {
    let grid = TorusGrid::new(1, 128, 8).unwrap();
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let p = 1.8;
    let cfg = SolverConfig::default().with_k(64.0).with_momentum(vec![p]);
    let s = EvansSolver::new(&grid, &ham, &cfg).unwrap();
    let r = solve_k_continuation(&grid, &ham, &cfg, 4.0).unwrap();
    assert!(r.converged);
    let reference = pendulum_reference(&ham.v, p).unwrap();
    let upper = minmax_upper_bound(&s, &r.u).unwrap();
    assert!(upper >= reference && upper <= reference + 0.2, "{upper} vs {reference}");
    assert!(upper >= r.hbar - 1e-9);
}

#[test]
fn free_and_drift_sweeps() {
    let grid = TorusGrid::new(1, 16, 16).unwrap();
    let drift = MechanicalHamiltonian::periodic_drift(1.0);
    let momenta = MomentumGrid::line(uniform_points(-2.0, 2.0, 0.5).unwrap());
    let table = sweep_p(&grid, &drift, &SolverConfig::default(), &momenta, SweepMode::Sequential).unwrap();
    assert!(table.all_converged());
    for (p, (h, q)) in table.p.iter().zip(table.hbar.iter().zip(&table.q)) {
        assert_abs_diff_eq!(*h, 0.5 * p[0] * p[0] + 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(q[0], p[0], epsilon = 1e-8);
    }
    assert!(rotation_consistency(&table).unwrap().max_discrepancy <= 1e-6);
    let one = sweep_p(&grid, &drift, &SolverConfig::default(), &line(&[1.0]), SweepMode::Sequential).unwrap();
    assert_abs_diff_eq!(one.hbar[0], 0.75, epsilon = 1e-10);

    let wide = MomentumGrid::line(uniform_points(-3.0, 3.0, 0.1).unwrap());
    let table = sweep_p(&grid, &drift, &SolverConfig::default(), &wide, SweepMode::Parallel { jobs: 4 }).unwrap();
    let qs: Vec<Vec<f64>> = uniform_points(-2.0, 2.0, 0.1).unwrap().into_iter().map(|q| vec![q]).collect();
    let leg = legendre_transform(&table, &qs).unwrap();
    for (q, l) in qs.iter().zip(&leg.lbar) {
        assert!((l - (0.5 * q[0] * q[0] - 0.25)).abs() <= 5e-3);
    }
}

#[test]
fn pendulum_table_symmetry_and_oracle() {
    let grid = TorusGrid::new(1, 64, 8).unwrap();
    let ham = MechanicalHamiltonian::pendulum(1.0);
    let cfg = SolverConfig::default().with_k(16.0);
    let table = sweep_p(&grid, &ham, &cfg, &line(&[-2.0, -0.7, 0.0, 0.7, 2.0]), SweepMode::Sequential).unwrap();
    assert!(table.all_converged());
    assert!((table.hbar[0] - table.hbar[4]).abs() <= 1e-8);
    assert!((table.hbar[1] - table.hbar[3]).abs() <= 1e-8);
    assert!(table.q[2][0].abs() <= 1e-8);
    let h2 = table.hbar[4];
    assert!((1.0..=3.0).contains(&h2));
    assert!((h2 - pendulum_reference(&ham.v, 2.0).unwrap()).abs() <= 0.15);
}

#[test]
fn trivial_and_drift_k_sweeps() {
    let grid = TorusGrid::new(1, 16, 16).unwrap();
    let ks = [4.0, 8.0, 16.0];
    let free = k_sweep(&grid, &MechanicalHamiltonian::free(1), &SolverConfig::default(), &ks).unwrap();
    for r in &free.rows {
        assert_eq!((r.hbar, r.entropy_over_k, r.lip_norm, r.aronsson_residual), (0.0, 0.0, 0.0, 0.0));
    }
    assert_eq!(free.hbar_ref, Some(0.0));
    let drift = k_sweep(&grid, &MechanicalHamiltonian::periodic_drift(1.0), &SolverConfig::default(), &ks).unwrap();
    for r in &drift.rows {
        assert_abs_diff_eq!(r.hbar, 0.25, epsilon = 1e-9);
        assert!(r.entropy_over_k.abs() <= 1e-9);
        assert!(r.aronsson_residual <= 1e-8);
    }
    assert_eq!(drift.hbar_ref, None);
}

#[test]
fn two_dimensional_solve() {
    let grid = TorusGrid::new(2, 16, 8).unwrap();
    let v = FourierSpec::cosine(vec![1, 0, 0], 0.5).plus(FourierSpec::cosine(vec![0, 1, 0], 0.5));
    let ham = MechanicalHamiltonian::new(2, vec![FourierSpec::cosine(vec![1], 0.3), FourierSpec::zero()], v).unwrap();
    let s = EvansSolver::new(&grid, &ham, &SolverConfig::default().with_k(4.0).with_momentum(vec![0.3, -0.2])).unwrap();
    let r = s.minimize(None).unwrap();
    assert!(r.converged);
    let (lo, hi) = s.hbar_bounds();
    assert!(r.hbar >= lo - 1e-9 && r.hbar <= hi + 1e-9);
    assert!(mfg_residuals(&s, &r).unwrap().hjb_residual <= 1e-10);
}

#[test]
fn bad_inputs_are_rejected() {
    let grid = TorusGrid::new(1, 8, 8).unwrap();
    let ham = MechanicalHamiltonian::new(1, vec![], FourierSpec::cosine(vec![4, 0], 1.0)).unwrap();
    assert!(EvansSolver::new(&grid, &ham, &SolverConfig::default()).is_err());
    let cfg = SolverConfig::default().with_k(-1.0);
    assert!(EvansSolver::new(&grid, &MechanicalHamiltonian::free(1), &cfg).is_err());
    let other = TorusGrid::new(1, 16, 8).unwrap();
    let s = EvansSolver::new(&grid, &MechanicalHamiltonian::free(1), &SolverConfig::default()).unwrap();
    assert!(s.objective(&ScalarField::zeros(&other)).is_err());
}
