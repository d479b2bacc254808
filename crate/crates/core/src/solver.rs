//! Minimization of `J_k[u; P] = (1/k) log mean exp(k (u_t + H(z, P + grad u)))`
//! over zero-mean fields on the torus.
//!
//! `J` is the log of Evans' functional, so its minimum is `H_k(P)` directly and
//! the softmax weights of the integrand are the mean-field-game density `m`.
//! With skew-adjoint derivatives the gradient of `J` in the `L^2(T^{d+1})`
//! pairing is exactly `-(m_t + div(m H_p))`, the transport residual.
//!
//! Each Newton step solves `G s = -g` with preconditioned conjugate gradients,
//! where `G` is the linearized Euler-Lagrange operator scaled to the Hessian of
//! `J` (the rank-one softmax covariance term is dropped, which keeps `G`
//! positive on zero-mean fields). The homotopy in `lambda` starts from the free
//! Hamiltonian where `u = 0` is the minimizer.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::grid::{project_in_place, DiffMethod, ScalarField, TorusGrid};
use crate::hamiltonian::{ChiParams, MechanicalHamiltonian, SampledHamiltonian};

/// Tolerance for intermediate homotopy stages; the last stage uses `grad_tol`.
const STAGE_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub(crate) fn scalar_or_vec<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Scalar(f64),
        Vector(Vec<f64>),
    }
    Ok(match Either::deserialize(de)? {
        Either::Scalar(x) => vec![x],
        Either::Vector(v) => v,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub k: f64,
    /// Momentum shift; empty means zero.
    #[serde(rename = "P", deserialize_with = "scalar_or_vec")]
    pub p: Vec<f64>,
    pub grad_tol: f64,
    pub max_newton: usize,
    pub lambda_schedule: Vec<f64>,
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Weight of the optional `epsilon |Du|^2 / 2` regularization.
    pub epsilon: f64,
    pub method: DiffMethod,
    pub precondition: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 8.0,
            p: Vec::new(),
            grad_tol: 1e-9,
            max_newton: 100,
            lambda_schedule: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            cg_tol: 0.1,
            cg_max: 400,
            epsilon: 0.0,
            method: DiffMethod::Spectral,
            precondition: true,
        }
    }
}

impl SolverConfig {
    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_momentum(mut self, p: Vec<f64>) -> Self {
        self.p = p;
        self
    }

    pub fn momentum(&self, d: usize) -> Vec<f64> {
        if self.p.is_empty() {
            vec![0.0; d]
        } else {
            self.p.clone()
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if !self.p.is_empty() && self.p.len() != d {
            return bad(format!("P has {} components, expected {d}", self.p.len()));
        }
        if self.p.iter().any(|x| !x.is_finite()) {
            return bad("P must be finite".into());
        }
        if !(self.grad_tol > 0.0 && self.cg_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.cg_max == 0 {
            return bad("cg_max must be positive".into());
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be non-negative".into());
        }
        let s = &self.lambda_schedule;
        if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return bad("lambda_schedule must be increasing in [0, 1]".into());
        }
        if *s.last().expect("non-empty") != 1.0 {
            return bad("lambda_schedule must end at 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Zero-mean minimizer.
    pub u: ScalarField,
    /// `H_k(P) = J_k[u]`.
    pub hbar: f64,
    /// Density `m = exp(k (u_t + H - hbar))`, mean one.
    pub m: ScalarField,
    pub grad_norm: f64,
    /// `max |Du|` over nodes.
    pub lip_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub k: f64,
    pub p: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub k: f64,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub lambda: f64,
    pub hbar: f64,
    pub grad_norm: f64,
    pub lip_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
}

impl SolveResult {
    pub fn metadata(&self) -> SolveMetadata {
        SolveMetadata {
            k: self.k,
            p: self.p.clone(),
            lambda: self.lambda,
            hbar: self.hbar,
            grad_norm: self.grad_norm,
            lip_norm: self.lip_norm,
            iterations: self.iterations,
            converged: self.converged,
            epsilon: self.epsilon,
        }
    }
}

/// Everything that depends on `u` at one Newton iterate.
pub(crate) struct State {
    pub lambda: f64,
    /// `D_a u`, space axes then time.
    pub du: Vec<Vec<f64>>,
    /// `H_p = P + grad u + lambda eta`.
    pub hp: Vec<Vec<f64>>,
    /// `u_t + H(z, P + grad u)`.
    pub f: Vec<f64>,
    pub m: Vec<f64>,
    pub j: f64,
    pub penalty: f64,
}

impl State {
    fn total(&self) -> f64 {
        self.j + self.penalty
    }

    pub fn rotation(&self, grid: &TorusGrid) -> Vec<f64> {
        self.hp
            .iter()
            .map(|c| c.iter().zip(&self.m).map(|(a, b)| a * b).sum::<f64>() / grid.len() as f64)
            .collect()
    }
}

/// Problem data for one `(H, grid, k, P)`.
#[derive(Clone, Debug)]
pub struct EvansSolver {
    grid: TorusGrid,
    ham: MechanicalHamiltonian,
    config: SolverConfig,
    momentum: Vec<f64>,
    sampled: SampledHamiltonian,
}

impl EvansSolver {
    pub fn new(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig) -> Result<Self> {
        ham.validate()?;
        ham.check_grid(grid)?;
        config.validate(ham.d)?;
        Ok(EvansSolver {
            grid: grid.clone(),
            ham: ham.clone(),
            config: config.clone(),
            momentum: config.momentum(ham.d),
            sampled: SampledHamiltonian::new(ham, grid),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &MechanicalHamiltonian {
        &self.ham
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub fn k(&self) -> f64 {
        self.config.k
    }

    pub(crate) fn method(&self) -> DiffMethod {
        self.config.method
    }

    pub(crate) fn sampled(&self) -> &SampledHamiltonian {
        &self.sampled
    }

    pub(crate) fn check_field(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.grid.check_values(u.values())
    }

    /// Rotation vector `Q = mean(m H_p)` at `u`.
    pub fn rotation_vector(&self, u: &ScalarField) -> Result<Vec<f64>> {
        self.check_field(u)?;
        let state = self.state(u.values(), self.ham.lambda);
        Ok(state.rotation(&self.grid))
    }

    pub(crate) fn state(&self, u: &[f64], lambda: f64) -> State {
        let grid = &self.grid;
        let d = grid.d();
        let n = grid.len();
        let k = self.config.k;
        let du: Vec<Vec<f64>> = (0..grid.axes())
            .map(|axis| grid.derivative(u, axis, self.method()))
            .collect();
        let hp: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let eta = &self.sampled.eta[i];
                (0..n)
                    .map(|idx| self.momentum[i] + du[i][idx] + lambda * eta[grid.time_index(idx)])
                    .collect()
            })
            .collect();
        let f: Vec<f64> = (0..n)
            .map(|idx| {
                let kinetic: f64 = hp.iter().map(|c| c[idx] * c[idx]).sum();
                du[d][idx] + 0.5 * kinetic + lambda * self.sampled.v[idx]
            })
            .collect();
        let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut m: Vec<f64> = f.iter().map(|fi| (k * (fi - top)).exp()).collect();
        let mass = grid.integrate(&m);
        m.iter_mut().for_each(|w| *w /= mass);
        let j = top + mass.ln() / k;
        let penalty = if self.config.epsilon > 0.0 {
            0.5 * self.config.epsilon * du.iter().map(|c| grid.inner(c, c)).sum::<f64>()
        } else {
            0.0
        };
        State {
            lambda,
            du,
            hp,
            f,
            m,
            j,
            penalty,
        }
    }

    /// `-(D_t m + sum_i D_i (m H_p_i))`, plus `-epsilon Laplacian(u)` when regularized.
    pub(crate) fn transport_gradient(&self, state: &State) -> Vec<f64> {
        let grid = &self.grid;
        let d = grid.d();
        let eps = self.config.epsilon;
        let mut g = vec![0.0; grid.len()];
        let mut scratch = vec![0.0; grid.len()];
        let mut flux = state.m.clone();
        if eps > 0.0 {
            flux.iter_mut().zip(&state.du[d]).for_each(|(a, b)| *a += eps * b);
        }
        grid.derivative_into(&flux, d, self.method(), &mut scratch);
        g.iter_mut().zip(&scratch).for_each(|(a, b)| *a -= b);
        for i in 0..d {
            for idx in 0..grid.len() {
                flux[idx] = state.m[idx] * state.hp[i][idx] + eps * state.du[i][idx];
            }
            grid.derivative_into(&flux, i, self.method(), &mut scratch);
            g.iter_mut().zip(&scratch).for_each(|(a, b)| *a -= b);
        }
        g
    }

    /// Hessian-scaled linearized Euler-Lagrange operator at `state` applied to `v`.
    pub(crate) fn operator_apply(&self, state: &State, v: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let d = grid.d();
        let n = grid.len();
        let k = self.config.k;
        let eps = self.config.epsilon;
        let dv: Vec<Vec<f64>> = (0..grid.axes())
            .map(|axis| grid.derivative(v, axis, self.method()))
            .collect();
        // k m (v_t + H_p . grad v)
        let transport: Vec<f64> = (0..n)
            .map(|idx| {
                let lv = dv[d][idx] + (0..d).map(|i| state.hp[i][idx] * dv[i][idx]).sum::<f64>();
                k * state.m[idx] * lv
            })
            .collect();
        let mut out = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let flux: Vec<f64> = (0..n).map(|idx| transport[idx] + eps * dv[d][idx]).collect();
        grid.derivative_into(&flux, d, self.method(), &mut scratch);
        out.iter_mut().zip(&scratch).for_each(|(a, b)| *a -= b);
        for i in 0..d {
            let flux: Vec<f64> = (0..n)
                .map(|idx| transport[idx] * state.hp[i][idx] + (state.m[idx] + eps) * dv[i][idx])
                .collect();
            grid.derivative_into(&flux, i, self.method(), &mut scratch);
            out.iter_mut().zip(&scratch).for_each(|(a, b)| *a -= b);
        }
        out
    }

    /// `(J, m)` at `u` for the Hamiltonian at its own `lambda`.
    pub fn objective(&self, u: &ScalarField) -> Result<(f64, ScalarField)> {
        self.check_field(u)?;
        let state = self.state(u.values(), self.ham.lambda);
        Ok((state.j, ScalarField::from_raw(&self.grid, state.m)))
    }

    /// `L^2` gradient of `J` (including the regularization term if enabled).
    pub fn gradient(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check_field(u)?;
        let state = self.state(u.values(), self.ham.lambda);
        Ok(ScalarField::from_raw(&self.grid, self.transport_gradient(&state)))
    }

    /// The linearized Euler-Lagrange operator about `u`, normalized by `k / I_k[u]`
    /// so that its quadratic form is `mean(m (k (v_t + H_p . grad v)^2 + |grad v|^2))`.
    pub fn linearized_el_apply(&self, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
        self.check_field(u)?;
        self.check_field(v)?;
        let state = self.state(u.values(), self.ham.lambda);
        Ok(ScalarField::from_raw(&self.grid, self.operator_apply(&state, v.values())))
    }

    fn preconditioner(&self, state: &State) -> Vec<f64> {
        let grid = &self.grid;
        let d = grid.d();
        let k = self.config.k;
        let eps = self.config.epsilon;
        let mean_v: Vec<f64> = (0..d).map(|i| grid.inner(&state.m, &state.hp[i])).collect();
        let mut cov = vec![vec![0.0; d]; d];
        for (i, row) in cov.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = (0..grid.len())
                    .map(|idx| state.m[idx] * (state.hp[i][idx] - mean_v[i]) * (state.hp[j][idx] - mean_v[j]))
                    .sum::<f64>()
                    / grid.len() as f64;
            }
        }
        let symbols: Vec<Vec<f64>> = (0..grid.axes())
            .map(|axis| {
                let n = grid.axis_len(axis);
                (0..n).map(|j| self.method().symbol(j, n)).collect()
            })
            .collect();
        (0..grid.len())
            .map(|idx| {
                let mi = grid.multi_index(idx);
                let w: Vec<f64> = (0..grid.axes()).map(|a| symbols[a][mi[a]]).collect();
                let along = w[d] + (0..d).map(|i| mean_v[i] * w[i]).sum::<f64>();
                let mut spread = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        spread += w[i] * cov[i][j] * w[j];
                    }
                }
                let grad2: f64 = w[..d].iter().map(|x| x * x).sum();
                let all2 = grad2 + w[d] * w[d];
                k * (along * along + spread) + grad2 + eps * all2
            })
            .collect()
    }

    fn apply_preconditioner(&self, symbol: &[f64], r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut buf: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.grid.fft_nd(&mut buf, false);
        for (c, &s) in buf.iter_mut().zip(symbol) {
            *c = if s > 0.0 { *c / s } else { Complex64::new(0.0, 0.0) };
        }
        self.grid.fft_nd(&mut buf, true);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// Approximately solves `G s = rhs` on zero-mean fields.
    fn newton_direction(&self, state: &State, rhs: &[f64], rel_tol: f64) -> Vec<f64> {
        let grid = &self.grid;
        let n = rhs.len();
        let symbol = self.config.precondition.then(|| self.preconditioner(state));
        let precondition = |r: &[f64]| match &symbol {
            Some(s) => self.apply_preconditioner(s, r),
            None => r.to_vec(),
        };
        let rhs_norm = grid.norm(rhs);
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = grid.inner(&r, &z);
        let mut iters = 0;
        while iters < self.config.cg_max {
            let ap = self.operator_apply(state, &p);
            let curvature = grid.inner(&p, &ap);
            iters += 1;
            if !(curvature > 0.0) {
                if iters == 1 {
                    x = z.clone();
                }
                break;
            }
            let alpha = rz / curvature;
            for idx in 0..n {
                x[idx] += alpha * p[idx];
                r[idx] -= alpha * ap[idx];
            }
            if grid.norm(&r) <= rel_tol * rhs_norm {
                break;
            }
            z = precondition(&r);
            let rz_next = grid.inner(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for idx in 0..n {
                p[idx] = z[idx] + beta * p[idx];
            }
        }
        project_in_place(grid, &mut x);
        x
    }

    /// Newton iterations at fixed `lambda` until `|g| <= tol` or the cap.
    fn newton_stage(&self, u: &mut Vec<f64>, lambda: f64, tol: f64, iterations: &mut usize) -> Result<(State, f64, bool)> {
        let grid = &self.grid;
        let mut state = self.state(u, lambda);
        for _ in 0..self.config.max_newton {
            let g = self.transport_gradient(&state);
            let g_norm = grid.norm(&g);
            if g_norm <= tol {
                return Ok((state, g_norm, true));
            }
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            let forcing = self.config.cg_tol.min(g_norm.sqrt()).max(1e-12);
            let mut step = self.newton_direction(&state, &rhs, forcing);
            let mut slope = grid.inner(&g, &step);
            if !(slope < 0.0) {
                step = rhs;
                slope = -g_norm * g_norm;
            }
            let current = state.total();
            let slack = 1e-14 * (1.0 + current.abs());
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
                project_in_place(grid, &mut trial);
                let trial_state = self.state(&trial, lambda);
                if trial_state.total() <= current + ARMIJO * alpha * slope + slack {
                    accepted = Some((trial, trial_state));
                    break;
                }
                alpha *= 0.5;
            }
            *iterations += 1;
            match accepted {
                Some((trial, trial_state)) => {
                    *u = trial;
                    state = trial_state;
                }
                None => {
                    return Err(Error::LineSearch {
                        iteration: *iterations,
                        grad_norm: g_norm,
                        lambda,
                    })
                }
            }
        }
        let g_norm = grid.norm(&self.transport_gradient(&state));
        Ok((state, g_norm, g_norm <= tol))
    }

    /// Minimizes `J` by lambda-continuation (cold start) or directly at the
    /// target lambda (warm start).
    pub fn minimize(&self, warm_start: Option<&ScalarField>) -> Result<SolveResult> {
        let grid = &self.grid;
        let target = self.ham.lambda;
        let (mut u, stages) = match warm_start {
            Some(w) => {
                self.check_field(w)?;
                let mut u = w.values().to_vec();
                project_in_place(grid, &mut u);
                (u, vec![1.0])
            }
            None => (vec![0.0; grid.len()], self.config.lambda_schedule.clone()),
        };
        let mut iterations = 0;
        let mut last = None;
        for (s, &fraction) in stages.iter().enumerate() {
            let final_stage = s + 1 == stages.len();
            let tol = if final_stage {
                self.config.grad_tol
            } else {
                self.config.grad_tol.max(STAGE_TOL)
            };
            let outcome = self.newton_stage(&mut u, fraction * target, tol, &mut iterations)?;
            if final_stage {
                last = Some(outcome);
            }
        }
        let (state, grad_norm, converged) = last.expect("schedule is non-empty");
        let lip_norm = (0..grid.len())
            .map(|idx| state.du.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(SolveResult {
            u: ScalarField::from_raw(grid, u),
            hbar: state.j,
            m: ScalarField::from_raw(grid, state.m),
            grad_norm,
            lip_norm,
            iterations,
            converged,
            k: self.config.k,
            p: self.momentum.clone(),
            lambda: state.lambda,
            epsilon: self.config.epsilon,
        })
    }

    /// `[min_z min_p H, max_z H(z, P)]` over grid nodes.
    pub fn hbar_bounds(&self) -> (f64, f64) {
        let lam = self.ham.lambda;
        let grid = &self.grid;
        let lower = self.sampled.v.iter().map(|v| lam * v).fold(f64::INFINITY, f64::min);
        let upper = (0..grid.len())
            .map(|idx| {
                let t = grid.time_index(idx);
                let kinetic: f64 = (0..grid.d())
                    .map(|i| (self.momentum[i] + lam * self.sampled.eta[i][t]).powi(2))
                    .sum();
                0.5 * kinetic + lam * self.sampled.v[idx]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        (lower, upper)
    }

    /// Lipschitz certificate for `H(z, P + p)` on this grid.
    pub fn lipschitz_certificate(&self) -> Result<LipschitzCertificate> {
        Ok(lipschitz_bound(self.ham.chi_bound_shifted(&self.grid, &self.momentum)?))
    }
}

/// Convenience wrapper: cold-start solve.
pub fn solve(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig) -> Result<SolveResult> {
    EvansSolver::new(grid, ham, config)?.minimize(None)
}

/// Solves at `k_start, 2 k_start, ...` below the target `k`, then at the
/// target, warm-starting each stage from the previous minimizer. Iteration
/// counts accumulate over the stages.
pub fn solve_k_continuation(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig, k_start: f64) -> Result<SolveResult> {
    if !(k_start > 0.0) {
        return Err(Error::InvalidConfig(format!("k_start must be positive, got {k_start}")));
    }
    let mut ks = Vec::new();
    let mut k = k_start;
    while k < config.k {
        ks.push(k);
        k *= 2.0;
    }
    ks.push(config.k);
    let mut warm: Option<SolveResult> = None;
    let mut iterations = 0;
    for k in ks {
        let solver = EvansSolver::new(grid, ham, &config.clone().with_k(k))?;
        let mut result = solver.minimize(warm.as_ref().map(|r| &r.u))?;
        iterations += result.iterations;
        result.iterations = iterations;
        warm = Some(result);
    }
    Ok(warm.expect("at least the target stage runs"))
}

/// A priori bound `|D phi| <= bound` for `C^2` solutions when `|b_k| <= chi(|q|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    pub chi: ChiParams,
    /// Lower end of the interval `[a, K]` that `g` maps onto `[0, 2]`.
    pub a: f64,
    #[serde(rename = "K")]
    pub bound: f64,
}

/// Ratio `a / K` used when building the certificate.
pub const CERTIFICATE_RATIO: f64 = 1e-9;

/// `g(t) = int_t^K 2 du / (chi(u) + 1)` in closed form for linear `chi`.
pub fn certificate_integral(chi: &ChiParams, t: f64, upper: f64) -> f64 {
    if chi.c > 0.0 {
        2.0 / chi.c * ((chi.c * upper + chi.d0 + 1.0) / (chi.c * t + chi.d0 + 1.0)).ln()
    } else {
        2.0 * (upper - t) / (chi.d0 + 1.0)
    }
}

/// Smallest `K` with `g(a) >= 2` where `a = K * CERTIFICATE_RATIO`, by bisection.
pub fn lipschitz_bound(chi: ChiParams) -> LipschitzCertificate {
    let reaches = |upper: f64| certificate_integral(&chi, upper * CERTIFICATE_RATIO, upper) >= 2.0;
    let mut hi = 1.0;
    while !reaches(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    LipschitzCertificate {
        chi,
        a: hi * CERTIFICATE_RATIO,
        bound: hi,
    }
}
