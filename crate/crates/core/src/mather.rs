//! Diagnostics for the entropy-penalized Mather measure `mu_k`, large-`k`
//! sweeps, and the classical one-dimensional cell-problem oracle.
//!
//! `mu_k` is never built on a `(z, v)` grid: it is supported on
//! `v = H_p(z, P + grad u)` with density `m`, so every integral against it is
//! an `m`-weighted mean over nodes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSpec;
use crate::grid::{ScalarField, TorusGrid};
use crate::hamiltonian::MechanicalHamiltonian;
use crate::solver::{EvansSolver, SolveResult, SolverConfig, State};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatherDiagnostics {
    pub k: f64,
    /// `mean(m L(z, H_p))`.
    pub action: f64,
    /// `mean(m log m) = k mean(m (u_t + H - hbar))`.
    pub entropy: f64,
    pub entropy_over_k: f64,
    pub rotation: Vec<f64>,
    pub sup_excess: f64,
    /// `|action + entropy / k + hbar - P . Q|`.
    pub identity_gap: f64,
    pub converged: bool,
}

fn weighted_mean(grid: &TorusGrid, m: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    values.zip(m).map(|(v, w)| v * w).sum::<f64>() / grid.len() as f64
}

fn diagnostics_from_state(solver: &EvansSolver, state: &State, hbar: f64, converged: bool) -> MatherDiagnostics {
    let grid = solver.grid();
    let k = solver.k();
    let lam = state.lambda;
    let sampled = solver.sampled();
    let d = grid.d();
    let lagrangian = (0..grid.len()).map(|idx| {
        let t = grid.time_index(idx);
        let kinetic: f64 = (0..d).map(|i| 0.5 * state.hp[i][idx].powi(2)).sum();
        let drift: f64 = (0..d).map(|i| state.hp[i][idx] * sampled.eta[i][t]).sum();
        kinetic - lam * drift - lam * sampled.v[idx]
    });
    let action = weighted_mean(grid, &state.m, lagrangian);
    let excess = weighted_mean(grid, &state.m, state.f.iter().map(|f| f - hbar));
    let entropy = k * excess;
    let rotation = state.rotation(grid);
    let pq: f64 = solver.momentum().iter().zip(&rotation).map(|(p, q)| p * q).sum();
    let sup_excess = state.f.iter().map(|f| f - hbar).fold(f64::NEG_INFINITY, f64::max);
    MatherDiagnostics {
        k,
        action,
        entropy,
        entropy_over_k: excess,
        identity_gap: (action + excess + hbar - pq).abs(),
        rotation,
        sup_excess,
        converged,
    }
}

/// Diagnostics for a solve; a non-converged input is still evaluated and flagged.
pub fn mather_diagnostics(solver: &EvansSolver, result: &SolveResult) -> Result<MatherDiagnostics> {
    solver.check_field(&result.u)?;
    let state = solver.state(result.u.values(), solver.hamiltonian().lambda);
    Ok(diagnostics_from_state(solver, &state, state.j, result.converged))
}

/// Frequency vectors of the holonomy test battery, each used with `cos` and `sin`.
fn battery_frequencies(grid: &TorusGrid) -> Vec<Vec<i64>> {
    let base: Vec<Vec<i64>> = if grid.d() == 1 {
        vec![
            vec![1, 0],
            vec![0, 1],
            vec![1, 1],
            vec![1, -1],
            vec![2, 0],
            vec![0, 2],
            vec![2, 1],
            vec![2, -1],
            vec![1, 2],
            vec![1, -2],
        ]
    } else {
        vec![
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 0, 1],
            vec![1, 0, -1],
            vec![0, 1, 1],
            vec![0, 1, -1],
            vec![1, 1, 0],
            vec![2, 0, 0],
            vec![0, 0, 2],
        ]
    };
    // frequencies at or above Nyquist on a short (or collapsed) axis are dropped
    base.into_iter()
        .filter(|f| f.iter().enumerate().all(|(a, &k)| k == 0 || 2 * (k.unsigned_abs() as usize) < grid.axis_len(a)))
        .collect()
}

/// The holonomy test fields used by [`holonomy_residual`].
pub fn holonomy_battery(grid: &TorusGrid) -> Vec<ScalarField> {
    battery_frequencies(grid)
        .into_iter()
        .flat_map(|freq| {
            let c = FourierSpec::cosine(freq.clone(), 1.0);
            let s = FourierSpec::sine(freq, 1.0);
            [
                ScalarField::from_fn(grid, |z| c.eval(z)),
                ScalarField::from_fn(grid, |z| s.eval(z)),
            ]
        })
        .collect()
}

/// `max_j |mean(m (D_t phi_j + grad phi_j . H_p))|` over the battery, with
/// `m` and `H_p` taken at `u`.
pub fn holonomy_residual(solver: &EvansSolver, u: &ScalarField) -> Result<f64> {
    solver.check_field(u)?;
    let grid = solver.grid();
    let d = grid.d();
    let state = solver.state(u.values(), solver.hamiltonian().lambda);
    let mut worst: f64 = 0.0;
    for phi in holonomy_battery(grid) {
        let dphi: Vec<Vec<f64>> = (0..grid.axes())
            .map(|a| grid.derivative(phi.values(), a, solver.method()))
            .collect();
        let flow = (0..grid.len()).map(|idx| dphi[d][idx] + (0..d).map(|i| dphi[i][idx] * state.hp[i][idx]).sum::<f64>());
        worst = worst.max(weighted_mean(grid, &state.m, flow).abs());
    }
    Ok(worst)
}

/// Sup norm of the formal large-`k` limit equation
/// `u_tt + 2 H_p . grad u_t + D^2 u(H_p, H_p) + H_t + H_x . H_p`.
pub fn aronsson_residual(solver: &EvansSolver, u: &ScalarField) -> Result<f64> {
    solver.check_field(u)?;
    let grid = solver.grid();
    let d = grid.d();
    let method = solver.method();
    let lam = solver.hamiltonian().lambda;
    let sampled = solver.sampled();
    let state = solver.state(u.values(), lam);
    let second = |a: usize, b: usize| grid.derivative(&state.du[a], b, method);
    let u_tt = second(d, d);
    let u_it: Vec<Vec<f64>> = (0..d).map(|i| second(i, d)).collect();
    let u_ij: Vec<Vec<Vec<f64>>> = (0..d).map(|i| (0..d).map(|j| second(i, j)).collect()).collect();
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let t = grid.time_index(idx);
        let hp: Vec<f64> = (0..d).map(|i| state.hp[i][idx]).collect();
        let mut r = u_tt[idx];
        for i in 0..d {
            r += 2.0 * hp[i] * u_it[i][idx];
            for j in 0..d {
                r += u_ij[i][j][idx] * hp[i] * hp[j];
            }
            r += lam * (hp[i] * sampled.eta_prime[i][t] + sampled.grad_v[i][idx] * hp[i]);
        }
        r += lam * sampled.v_t[idx];
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: f64,
    pub hbar: f64,
    pub entropy_over_k: f64,
    /// `max_z (u_t + H - hbar)^+`.
    pub sup_excess_positive: f64,
    pub lip_norm: f64,
    pub aronsson_residual: f64,
    /// `max_z (u_t + H)`, an upper bound for the limit constant.
    pub minmax: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

impl KSweepRow {
    pub const CSV_HEADER: [&'static str; 9] = [
        "k",
        "hbar",
        "entropy_over_k",
        "sup_excess_positive",
        "lip_norm",
        "aronsson_residual",
        "minmax",
        "grad_norm",
        "converged",
    ];

    pub fn csv_row(&self) -> [String; 9] {
        [
            format!("{:?}", self.k),
            format!("{:?}", self.hbar),
            format!("{:?}", self.entropy_over_k),
            format!("{:?}", self.sup_excess_positive),
            format!("{:?}", self.lip_norm),
            format!("{:?}", self.aronsson_residual),
            format!("{:?}", self.minmax),
            format!("{:?}", self.grad_norm),
            self.converged.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweepReport {
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub rows: Vec<KSweepRow>,
    /// Classical `H-bar(P)` when the case admits the one-dimensional oracle.
    pub hbar_ref: Option<f64>,
}

impl KSweepReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(KSweepRow::CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }

    /// `(max - min) / max` of `lip_norm` over the rows, `0` when all vanish.
    pub fn lip_variation(&self) -> f64 {
        let hi = self.rows.iter().map(|r| r.lip_norm).fold(0.0, f64::max);
        let lo = self.rows.iter().map(|r| r.lip_norm).fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            (hi - lo) / hi
        } else {
            0.0
        }
    }
}

/// Solves for each `k` in increasing order, warm-starting from the previous
/// minimizer.
pub fn k_sweep(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig, k_list: &[f64]) -> Result<KSweepReport> {
    if k_list.is_empty() {
        return Err(Error::InvalidConfig("k_list is empty".into()));
    }
    if k_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(format!("k_list must be strictly increasing, got {k_list:?}")));
    }
    let mut rows = Vec::with_capacity(k_list.len());
    let mut warm: Option<ScalarField> = None;
    for &k in k_list {
        let solver = EvansSolver::new(grid, ham, &config.clone().with_k(k))?;
        let result = solver.minimize(warm.as_ref())?;
        let state = solver.state(result.u.values(), ham.lambda);
        let diag = diagnostics_from_state(&solver, &state, result.hbar, result.converged);
        rows.push(KSweepRow {
            k,
            hbar: result.hbar,
            entropy_over_k: diag.entropy_over_k,
            sup_excess_positive: diag.sup_excess.max(0.0),
            lip_norm: result.lip_norm,
            aronsson_residual: aronsson_residual(&solver, &result.u)?,
            minmax: state.f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            grad_norm: result.grad_norm,
            converged: result.converged,
        });
        warm = Some(result.u);
    }
    let p = config.momentum(ham.d);
    let hbar_ref = if ham.d == 1 && ham.is_autonomous() && ham.eta.iter().all(FourierSpec::is_zero) {
        let v = scaled(&ham.v, ham.lambda);
        Some(pendulum_reference(&v, p[0])?)
    } else {
        None
    };
    Ok(KSweepReport { p, rows, hbar_ref })
}

fn scaled(spec: &FourierSpec, factor: f64) -> FourierSpec {
    let mut out = spec.clone();
    for t in &mut out.terms {
        t.cos *= factor;
        t.sin *= factor;
    }
    out
}

const QUADRATURE_NODES: usize = 10_000;
const REFERENCE_TOL: f64 = 1e-10;

/// `V` on the quadrature nodes and its maximum (node maximum refined by
/// golden-section search).
fn sample_autonomous(v: &FourierSpec) -> Result<(Vec<f64>, f64)> {
    for t in &v.terms {
        let time_freq = match t.freq.len() {
            1 => 0,
            2 => t.freq[1],
            _ => return Err(Error::Precondition(format!("V frequency {:?} is not one-dimensional", t.freq))),
        };
        if time_freq != 0 && (t.cos != 0.0 || t.sin != 0.0) {
            return Err(Error::Precondition("V must be time-independent".into()));
        }
    }
    let eval = |x: f64| v.eval(&[x, 0.0]);
    let h = 1.0 / QUADRATURE_NODES as f64;
    let values: Vec<f64> = (0..QUADRATURE_NODES).map(|i| eval(i as f64 * h)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &y)| if y > acc.1 { (i, y) } else { acc });
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    while b - a > 1e-13 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if eval(c) > eval(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let max_v = values.iter().copied().fold(eval(0.5 * (a + b)), f64::max);
    Ok((values, max_v))
}

fn action_integral(values: &[f64], energy: f64) -> f64 {
    values.iter().map(|v| (2.0 * (energy - v).max(0.0)).sqrt()).sum::<f64>() / values.len() as f64
}

/// `P* = int_0^1 sqrt(2 (max V - V(x))) dx` for an autonomous one-dimensional `V`.
pub fn critical_momentum(v: &FourierSpec) -> Result<f64> {
    let (values, max_v) = sample_autonomous(v)?;
    Ok(action_integral(&values, max_v))
}

/// Classical effective Hamiltonian of `1/2 p^2 + V(x)` on the circle.
pub fn pendulum_reference(v: &FourierSpec, p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Precondition(format!("momentum must be finite, got {p}")));
    }
    let (values, max_v) = sample_autonomous(v)?;
    let target = p.abs();
    if target <= action_integral(&values, max_v) {
        return Ok(max_v);
    }
    // int sqrt(2 (E - V)) >= sqrt(2 (E - max V)), so this upper end brackets the root
    let (mut lo, mut hi) = (max_v, max_v + 0.5 * target * target);
    while hi - lo > REFERENCE_TOL {
        let mid = 0.5 * (lo + hi);
        if action_integral(&values, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `4 / pi`, the critical momentum of `V = cos(2 pi x)`.
pub const PENDULUM_CRITICAL_MOMENTUM: f64 = 4.0 / PI;
