use std::io::Cursor;

use evans_kam::check::band_limited;
use evans_kam::effective::convexity_check;
use evans_kam::io::{read_binary, read_csv, write_binary, write_csv};
use evans_kam::{DiffMethod, EvansSolver, FourierSpec, Hamiltonian, MechanicalHamiltonian, ScalarField, SolverConfig, TorusGrid};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn forced() -> MechanicalHamiltonian {
    let eta = vec![FourierSpec::sine(vec![1], 0.5)];
    let v = FourierSpec::cosine(vec![1, 0], 1.0).plus(FourierSpec::cosine(vec![1, -1], 0.5));
    MechanicalHamiltonian::new(1, eta, v).unwrap()
}

fn field(grid: &TorusGrid, seed: u64, amplitude: f64) -> ScalarField {
    band_limited(grid, &mut StdRng::seed_from_u64(seed), amplitude)
}

fn method() -> impl Strategy<Value = DiffMethod> {
    prop_oneof![Just(DiffMethod::Spectral), Just(DiffMethod::Central4)]
}

fn even_or_one(max: usize) -> impl Strategy<Value = usize> {
    (0..=max / 2).prop_map(|h| if h == 0 { 1 } else { 2 * h })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_is_skew_adjoint(seed in any::<u64>(), method in method(), axis in 0usize..2) {
        let grid = TorusGrid::new(1, 16, 12).unwrap();
        let f = field(&grid, seed, 1.0);
        let g = field(&grid, seed.wrapping_add(1), 1.0);
        let df = f.partial(axis, method).unwrap();
        let dg = g.partial(axis, method).unwrap();
        let lhs = grid.inner(df.values(), g.values());
        let rhs = -grid.inner(f.values(), dg.values());
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
        prop_assert!(df.integrate().abs() <= 1e-13);
    }

    #[test]
    fn objective_ignores_constants(seed in any::<u64>(), c in -10.0f64..10.0, k in 1.0f64..32.0) {
        let grid = TorusGrid::new(1, 16, 16).unwrap();
        let s = EvansSolver::new(&grid, &forced(), &SolverConfig::default().with_k(k)).unwrap();
        let u = field(&grid, seed, 0.3);
        let shifted = ScalarField::new(&grid, u.values().iter().map(|x| x + c).collect()).unwrap();
        let (a, _) = s.objective(&u).unwrap();
        let (b, _) = s.objective(&shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
    }

    #[test]
    fn objective_is_convex_along_segments(seed in any::<u64>(), k in 1.0f64..32.0, p in -2.0f64..2.0) {
        let grid = TorusGrid::new(1, 16, 16).unwrap();
        let s = EvansSolver::new(&grid, &forced(), &SolverConfig::default().with_k(k).with_momentum(vec![p])).unwrap();
        let u = field(&grid, seed, 0.3);
        let w = field(&grid, seed ^ 0x5bd1, 0.3);
        let (ju, _) = s.objective(&u).unwrap();
        let (jw, _) = s.objective(&w).unwrap();
        for i in 0..=10 {
            let theta = i as f64 / 10.0;
            let mix: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            let (jm, _) = s.objective(&ScalarField::new(&grid, mix).unwrap()).unwrap();
            prop_assert!(jm <= theta * ju + (1.0 - theta) * jw + 1e-12);
        }
    }

    #[test]
    fn objective_sits_between_mean_and_max(seed in any::<u64>(), k in 1.0f64..64.0) {
        let grid = TorusGrid::new(1, 16, 16).unwrap();
        let ham = forced();
        let s = EvansSolver::new(&grid, &ham, &SolverConfig::default().with_k(k)).unwrap();
        let u = field(&grid, seed, 0.3);
        let (j, m) = s.objective(&u).unwrap();
        let ux = u.partial(0, DiffMethod::Spectral).unwrap();
        let ut = u.partial(1, DiffMethod::Spectral).unwrap();
        let f: Vec<f64> = grid
            .points()
            .enumerate()
            .map(|(i, z)| ut.values()[i] + ham.hamiltonian(&z, &[ux.values()[i]]))
            .collect();
        let mean = grid.integrate(&f);
        let max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(j >= mean - 1e-12 && j <= max + 1e-12);
        prop_assert!((m.integrate() - 1.0).abs() <= 1e-12);
        prop_assert!(m.values().iter().all(|&w| w >= 0.0) && m.max() > 0.0);
    }

    #[test]
    fn gauss_newton_operator_is_symmetric_and_nonnegative(seed in any::<u64>(), method in method(), k in 1.0f64..32.0) {
        let grid = TorusGrid::new(1, 16, 12).unwrap();
        let cfg = SolverConfig { method, ..SolverConfig::default().with_k(k) };
        let s = EvansSolver::new(&grid, &forced(), &cfg).unwrap();
        let u = field(&grid, seed, 0.3);
        let v = field(&grid, seed.wrapping_mul(3), 1.0);
        let w = field(&grid, seed.wrapping_mul(7), 1.0);
        let gv = s.linearized_el_apply(&u, &v).unwrap();
        let gw = s.linearized_el_apply(&u, &w).unwrap();
        let a = grid.inner(gv.values(), w.values());
        let b = grid.inner(v.values(), gw.values());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        prop_assert!(grid.inner(gv.values(), v.values()) >= -1e-12);
        prop_assert!(gv.integrate().abs() <= 1e-10 * (1.0 + k));
    }

    #[test]
    fn fenchel_young_inequality(x in 0.0f64..1.0, t in 0.0f64..1.0, p in -5.0f64..5.0, v in -5.0f64..5.0) {
        let ham = forced();
        let z = [x, t];
        let gap = ham.hamiltonian(&z, &[p]) + ham.lagrangian(&z, &[v]) - p * v;
        prop_assert!(gap >= -1e-12);
    }

    #[test]
    fn convexity_check_accepts_convex_samples(a in 0.01f64..5.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let values: Vec<f64> = (0..41).map(|i| {
            let p = -2.0 + 0.1 * i as f64;
            a * p * p + b * p + c
        }).collect();
        let report = convexity_check(&values);
        prop_assert!(report.max_violation <= 1e-12);
        prop_assert!(report.margin > 0.0);
    }

    #[test]
    fn field_io_round_trips_exactly(seed in any::<u64>(), n_x in even_or_one(12), n_t in even_or_one(8)) {
        let grid = TorusGrid::new(1, n_x, n_t).unwrap();
        let f = field(&grid, seed, 1e3);
        let mut csv = Vec::new();
        write_csv(&f, &mut csv).unwrap();
        let back = read_csv(Cursor::new(csv)).unwrap();
        prop_assert_eq!(back.values(), f.values());
        let mut bin = Vec::new();
        write_binary(&f, &mut bin).unwrap();
        let back = read_binary(Cursor::new(bin)).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!((back.grid().n_x(), back.grid().n_t()), (n_x, n_t));
    }
}
