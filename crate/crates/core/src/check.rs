//! Seeded invariant battery on a small grid.

use std::f64::consts::PI;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{mfg_residuals, minmax_upper_bound};
use crate::effective::{convexity_check, fenchel_young_gap, legendre_transform, uniform_points, EffectiveTable, MomentumGrid};
use crate::error::Result;
use crate::fourier::FourierSpec;
use crate::grid::{DiffMethod, ScalarField, TorusGrid};
use crate::hamiltonian::{ChiParams, Hamiltonian, MechanicalHamiltonian};
use crate::mather::{critical_momentum, holonomy_residual, mather_diagnostics, PENDULUM_CRITICAL_MOMENTUM};
use crate::solver::{lipschitz_bound, EvansSolver, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub seed: u64,
    pub n: usize,
    pub method: DiffMethod,
    /// Test hook: negate the analytic gradient before comparing it.
    pub inject_sign_error: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 0,
            n: 16,
            method: DiffMethod::Spectral,
            inject_sign_error: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub seconds: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Battery {
    checks: Vec<CheckOutcome>,
}

impl Battery {
    /// Records `value <= tolerance`; NaN fails.
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }
}

/// A random trigonometric polynomial with frequencies `|j| <= 3` per axis.
pub fn band_limited(grid: &TorusGrid, rng: &mut StdRng, amplitude: f64) -> ScalarField {
    let axes = grid.axes();
    let mut spec = FourierSpec::zero();
    let limits: Vec<i64> = (0..axes).map(|a| (((grid.axis_len(a) as i64) - 1) / 2).min(3)).collect();
    for _ in 0..8 {
        let freq: Vec<i64> = limits.iter().map(|&l| rng.gen_range(-l..=l)).collect();
        let c = rng.gen_range(-1.0..1.0) * amplitude;
        let s = rng.gen_range(-1.0..1.0) * amplitude;
        spec = spec.plus(FourierSpec {
            terms: vec![crate::fourier::FourierTerm { freq, cos: c, sin: s }],
        });
    }
    ScalarField::from_fn(grid, |z| spec.eval(z)).project_zero_mean()
}

fn forced(d: usize) -> MechanicalHamiltonian {
    let eta = (0..d).map(|i| FourierSpec::cosine(vec![1], 0.5).plus(FourierSpec::sine(vec![2], 0.2 * (i as f64 + 1.0)))).collect();
    let mut x = vec![0; d + 1];
    x[0] = 1;
    let mut xt = x.clone();
    xt[d] = -1;
    let v = FourierSpec::cosine(x, 1.0).plus(FourierSpec::sine(xt, 0.3));
    MechanicalHamiltonian::new(d, eta, v).expect("fixed battery Hamiltonian is valid")
}

fn add(a: &ScalarField, b: &ScalarField, s: f64) -> ScalarField {
    ScalarField::from_raw(a.grid(), a.values().iter().zip(b.values()).map(|(x, y)| x + s * y).collect())
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Runs every named invariant and reports the outcomes.
pub fn run_checks(options: &CheckOptions) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(options.seed);
    let mut b = Battery { checks: Vec::new() };
    let grid = TorusGrid::new(1, options.n, options.n)?;
    let base = SolverConfig {
        method: options.method,
        ..SolverConfig::default()
    };
    let pendulum = MechanicalHamiltonian::pendulum(1.0);

    // gradient against central differences of J
    let solver = EvansSolver::new(&grid, &pendulum, &base.clone().with_k(4.0))?;
    let u = band_limited(&grid, &mut rng, 0.1);
    let mut g = solver.gradient(&u)?;
    if options.inject_sign_error {
        g = ScalarField::from_raw(&grid, g.values().iter().map(|x| -x).collect());
    }
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let v = band_limited(&grid, &mut rng, 0.02);
        let h = 1e-5;
        let jp = solver.objective(&add(&u, &v, h))?.0;
        let jm = solver.objective(&add(&u, &v, -h))?.0;
        worst = worst.max(relative(grid.inner(g.values(), v.values()), (jp - jm) / (2.0 * h)));
    }
    b.at_most("gradient_fd", worst, 1e-6);

    // linearized operator
    let fsolver = EvansSolver::new(&grid, &forced(1), &base.clone().with_k(4.0))?;
    let u = band_limited(&grid, &mut rng, 0.05);
    let v = band_limited(&grid, &mut rng, 1.0);
    let w = band_limited(&grid, &mut rng, 1.0);
    let gv = fsolver.linearized_el_apply(&u, &v)?;
    let gw = fsolver.linearized_el_apply(&u, &w)?;
    b.at_most(
        "operator_symmetry",
        relative(grid.inner(gv.values(), w.values()), grid.inner(v.values(), gw.values())),
        1e-10,
    );
    let gc = fsolver.linearized_el_apply(&u, &ScalarField::constant(&grid, 1.7))?;
    b.at_most("operator_constant_null", gc.values().iter().fold(0.0, |a: f64, x| a.max(x.abs())), 1e-12);
    b.at_most("operator_nonnegative", -grid.inner(gv.values(), v.values()), 1e-12);

    // pointwise Hamiltonian structure
    let ham = forced(1);
    let (mut sigma_err, mut fenchel_err, mut fd_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let z = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let p = [rng.gen_range(-3.0..3.0)];
        let dd = ham.drift_diffusion(4.0, &z, &[p[0], 0.0])?;
        sigma_err = sigma_err.max((&dd.a - &dd.sigma * dd.sigma.transpose()).amax());
        let e = ham.evaluate(&z, &p);
        let vel = [e.h_p[0]];
        fenchel_err = fenchel_err.max((e.h + ham.lagrangian(&z, &vel) - p[0] * vel[0]).abs());
        let h = 1e-6;
        let dp = (ham.hamiltonian(&z, &[p[0] + h]) - ham.hamiltonian(&z, &[p[0] - h])) / (2.0 * h);
        let dx = (ham.hamiltonian(&[z[0] + h, z[1]], &p) - ham.hamiltonian(&[z[0] - h, z[1]], &p)) / (2.0 * h);
        let dt = (ham.hamiltonian(&[z[0], z[1] + h], &p) - ham.hamiltonian(&[z[0], z[1] - h], &p)) / (2.0 * h);
        fd_err = fd_err.max((dp - e.h_p[0]).abs()).max((dx - e.h_x[0]).abs()).max((dt - e.h_t).abs());
    }
    b.at_most("diffusion_factorization", sigma_err, 1e-14);
    b.at_most("fenchel_equality", fenchel_err, 1e-12);
    b.at_most("hamiltonian_fd", fd_err, 1e-6);

    // spectral calculus
    let s = ScalarField::from_fn(&grid, |z| (2.0 * PI * (z[0] + 2.0 * z[1])).sin());
    let ds = s.partial(1, DiffMethod::Spectral)?;
    let exact = ScalarField::from_fn(&grid, |z| 4.0 * PI * (2.0 * PI * (z[0] + 2.0 * z[1])).cos());
    b.at_most("spectral_derivative", ds.max_abs_diff(&exact)?, 1e-10);
    let r = band_limited(&grid, &mut rng, 1.0);
    b.at_most("derivative_zero_mean", r.partial(0, options.method)?.integrate().abs(), 1e-13);

    // solves: bounds and certification
    let cfg = base.clone().with_k(8.0).with_momentum(vec![0.5]);
    let mut bound_gap: f64 = 0.0;
    let mut hjb: f64 = 0.0;
    let mut mass: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut holonomy: f64 = 0.0;
    let mut lip_ratio: f64 = 0.0;
    let mut minmax_gap: f64 = 0.0;
    for ham in [pendulum.clone(), MechanicalHamiltonian::periodic_drift(1.0)] {
        let solver = EvansSolver::new(&grid, &ham, &cfg)?;
        let res = solver.minimize(None)?;
        let (lo, hi) = solver.hbar_bounds();
        bound_gap = bound_gap.max(lo - res.hbar).max(res.hbar - hi);
        let rep = mfg_residuals(&solver, &res)?;
        hjb = hjb.max(rep.hjb_residual);
        mass = mass.max((rep.mass_m - 1.0).abs());
        gap = gap.max(mather_diagnostics(&solver, &res)?.identity_gap);
        holonomy = holonomy.max(holonomy_residual(&solver, &res.u)?);
        lip_ratio = lip_ratio.max(res.lip_norm / solver.lipschitz_certificate()?.bound);
        minmax_gap = minmax_gap.max(res.hbar - minmax_upper_bound(&solver, &res.u)?);
    }
    b.at_most("hbar_bounds", bound_gap, 1e-9);
    b.at_most("hjb_identity", hjb, 1e-10);
    b.at_most("mass_normalization", mass, 1e-10);
    b.at_most("action_identity", gap, 1e-7);
    b.at_most("holonomy", holonomy, 1e-7);
    b.at_most("minmax_dominates", minmax_gap, 1e-9);
    b.at_most("lipschitz_certificate", lip_ratio, 1.1);

    // certificates and oracles in closed form
    let k1 = lipschitz_bound(ChiParams { c: 1.0, d0: 0.0 }).bound;
    let k0 = lipschitz_bound(ChiParams { c: 0.0, d0: 0.0 }).bound;
    b.at_most("certificate_closed_form", (k1 - (1f64.exp() - 1.0)).abs().max((k0 - 1.0).abs()), 1e-6);
    let pstar = critical_momentum(&pendulum.v)?;
    b.at_most("critical_momentum", (pstar - PENDULUM_CRITICAL_MOMENTUM).abs(), 1e-6);

    // discrete duality on a quadratic table
    let ps = uniform_points(-2.0, 2.0, 0.1)?;
    let table = EffectiveTable {
        k: 1.0,
        grid: MomentumGrid::line(ps.clone()),
        p: ps.iter().map(|&p| vec![p]).collect(),
        hbar: ps.iter().map(|p| 0.5 * p * p).collect(),
        q: ps.iter().map(|&p| vec![p]).collect(),
        converged: vec![true; ps.len()],
    };
    b.at_most("convexity", convexity_check(&table.hbar).max_violation, 1e-12);
    let qs: Vec<Vec<f64>> = uniform_points(-1.5, 1.5, 0.1)?.into_iter().map(|q| vec![q]).collect();
    let leg = legendre_transform(&table, &qs)?;
    b.at_most("fenchel_young", -fenchel_young_gap(&table, &leg), 1e-9);

    Ok(CheckReport {
        seed: options.seed,
        checks: b.checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
