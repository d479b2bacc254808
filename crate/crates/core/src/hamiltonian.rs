//! The mechanical family `H_lambda(x, t, p) = |p + lambda eta(t)|^2 / 2 + lambda V(x, t)`
//! together with its Lagrangian, the diffusion matrix `a_k = sigma sigma^T` and
//! drift `b_k` of the quasilinear form of the Euler-Lagrange equation, and the
//! linear growth bound `|b_k(z, q)| <= c |q| + d0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSpec;
use crate::grid::TorusGrid;

/// Value and first derivatives of a Hamiltonian at `(z, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianEval {
    pub h: f64,
    pub h_p: DVector<f64>,
    pub h_pp: DMatrix<f64>,
    pub h_x: DVector<f64>,
    pub h_t: f64,
}

/// Coefficients of `Tr(a_k D^2 u) + b_k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftDiffusion {
    pub a: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub b: f64,
}

/// Contract shared by Hamiltonians on `T^{d+1} x R^d`.
pub trait Hamiltonian {
    fn dim(&self) -> usize;

    fn evaluate(&self, z: &[f64], p: &[f64]) -> HamiltonianEval;

    /// `L(z, v) = sup_p p.v - H(z, p)`.
    fn lagrangian(&self, z: &[f64], v: &[f64]) -> f64;

    /// `Tr H_px` evaluated at `(z, p)`.
    fn trace_h_px(&self, z: &[f64], p: &[f64]) -> f64;

    fn drift_diffusion(&self, k: f64, z: &[f64], q: &[f64]) -> Result<DriftDiffusion> {
        if !(k > 0.0) {
            return Err(Error::Precondition(format!("k must be positive, got {k}")));
        }
        let d = self.dim();
        if q.len() != d + 1 {
            return Err(Error::Precondition(format!("q must have {} components", d + 1)));
        }
        let p = &q[..d];
        let e = self.evaluate(z, p);
        let scaled = &e.h_pp / k;
        let root = scaled
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidHamiltonian("H_pp is not positive definite".into()))?
            .l();
        let mut a = DMatrix::zeros(d + 1, d + 1);
        let mut sigma = DMatrix::zeros(d + 1, d + 1);
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = scaled[(i, j)] + e.h_p[i] * e.h_p[j];
                sigma[(i, j)] = root[(i, j)];
            }
            a[(i, d)] = e.h_p[i];
            a[(d, i)] = e.h_p[i];
            sigma[(i, d)] = e.h_p[i];
        }
        a[(d, d)] = 1.0;
        sigma[(d, d)] = 1.0;
        let b = e.h_t + e.h_x.dot(&e.h_p) + self.trace_h_px(z, p) / k;
        Ok(DriftDiffusion { a, sigma, b })
    }
}

fn default_lambda() -> f64 {
    1.0
}

/// `H(x, t, p) = |p + lambda eta(t)|^2 / 2 + lambda V(x, t)` with `eta` and `V`
/// given as Fourier series. `eta` has one time-only series per spatial
/// component (frequencies of length 1); `V` has frequencies of length `d + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanicalHamiltonian {
    pub d: usize,
    #[serde(default)]
    pub eta: Vec<FourierSpec>,
    #[serde(rename = "V")]
    pub v: FourierSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl MechanicalHamiltonian {
    pub fn new(d: usize, eta: Vec<FourierSpec>, v: FourierSpec) -> Result<Self> {
        let ham = MechanicalHamiltonian {
            d,
            eta,
            v,
            lambda: 1.0,
        };
        ham.validate()?;
        Ok(ham)
    }

    /// `H = |p|^2 / 2`.
    pub fn free(d: usize) -> Self {
        MechanicalHamiltonian {
            d,
            eta: vec![FourierSpec::zero(); d],
            v: FourierSpec::zero(),
            lambda: 1.0,
        }
    }

    /// `d = 1`, `eta = 0`, `V = amplitude * cos(2 pi x)`.
    pub fn pendulum(amplitude: f64) -> Self {
        MechanicalHamiltonian {
            d: 1,
            eta: vec![FourierSpec::zero()],
            v: FourierSpec::cosine(vec![1, 0], amplitude),
            lambda: 1.0,
        }
    }

    /// `d = 1`, `eta(t) = amplitude * cos(2 pi t)`, `V = 0`.
    pub fn periodic_drift(amplitude: f64) -> Self {
        MechanicalHamiltonian {
            d: 1,
            eta: vec![FourierSpec::cosine(vec![1], amplitude)],
            v: FourierSpec::zero(),
            lambda: 1.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return Err(Error::InvalidHamiltonian(format!("d = {} not in {{1, 2}}", self.d)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidHamiltonian(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if !self.eta.is_empty() && self.eta.len() != self.d {
            return Err(Error::InvalidHamiltonian(format!(
                "eta has {} components, expected {}",
                self.eta.len(),
                self.d
            )));
        }
        for (i, e) in self.eta.iter().enumerate() {
            e.check_dimension(1, &format!("eta[{i}]"))?;
        }
        self.v.check_dimension(self.d + 1, "V")?;
        let all_finite = self
            .eta
            .iter()
            .chain(std::iter::once(&self.v))
            .flat_map(|s| &s.terms)
            .all(|t| t.cos.is_finite() && t.sin.is_finite());
        if !all_finite {
            return Err(Error::InvalidHamiltonian("non-finite Fourier coefficient".into()));
        }
        Ok(())
    }

    /// Every Fourier frequency must sit strictly below the grid's Nyquist limit.
    pub fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if grid.d() != self.d {
            return Err(Error::InvalidHamiltonian(format!(
                "hamiltonian has d = {}, grid has d = {}",
                self.d,
                grid.d()
            )));
        }
        let axes: Vec<usize> = (0..=self.d).collect();
        self.v.check_nyquist(grid, &axes)?;
        for e in &self.eta {
            e.check_nyquist(grid, &[grid.time_axis()])?;
        }
        Ok(())
    }

    pub fn is_autonomous(&self) -> bool {
        self.eta.iter().all(FourierSpec::is_zero) && self.v.independent_of(self.d)
    }

    pub fn eta_at(&self, t: f64) -> Vec<f64> {
        (0..self.d)
            .map(|i| self.eta.get(i).map_or(0.0, |e| e.eval(&[t])))
            .collect()
    }

    fn eta_prime_at(&self, t: f64) -> Vec<f64> {
        (0..self.d)
            .map(|i| self.eta.get(i).map_or(0.0, |e| e.partial(&[t], 0)))
            .collect()
    }

    /// Velocity `H_p = p + lambda eta(t)`.
    fn velocity(&self, z: &[f64], p: &[f64]) -> Vec<f64> {
        let eta = self.eta_at(z[self.d]);
        p.iter().zip(&eta).map(|(pi, ei)| pi + self.lambda * ei).collect()
    }

    pub fn hamiltonian(&self, z: &[f64], p: &[f64]) -> f64 {
        let hp = self.velocity(z, p);
        0.5 * hp.iter().map(|v| v * v).sum::<f64>() + self.lambda * self.v.eval(z)
    }

    /// Growth bound for the Hamiltonian `H(z, P + p)`; see [`ChiParams`].
    pub fn chi_bound_shifted(&self, grid: &TorusGrid, momentum: &[f64]) -> Result<ChiParams> {
        let d = self.d;
        let lam = self.lambda;
        let mut c: f64 = 0.0;
        let mut eta_max: f64 = 0.0;
        let mut vt_max: f64 = 0.0;
        for z in grid.points() {
            let t = z[d];
            let deta = self.eta_prime_at(t);
            let grad_v: Vec<f64> = (0..d).map(|i| self.v.partial(&z, i)).collect();
            let slope = lam * (norm(&deta) + norm(&grad_v));
            c = c.max(slope);
            let shifted: Vec<f64> = self
                .eta_at(t)
                .iter()
                .zip(momentum)
                .map(|(e, p)| lam * e + p)
                .collect();
            eta_max = eta_max.max(norm(&shifted));
            vt_max = vt_max.max((lam * self.v.partial(&z, d)).abs());
        }
        let chi = ChiParams {
            c,
            d0: c * eta_max + vt_max,
        };
        self.verify_chi(grid, momentum, &chi, eta_max)?;
        Ok(chi)
    }

    /// `chi_bound_shifted` with zero momentum shift.
    pub fn chi_bound(&self, grid: &TorusGrid) -> Result<ChiParams> {
        self.chi_bound_shifted(grid, &vec![0.0; self.d])
    }

    fn verify_chi(&self, grid: &TorusGrid, momentum: &[f64], chi: &ChiParams, eta_max: f64) -> Result<()> {
        let d = self.d;
        let q_max = 10.0 * (1.0 + eta_max);
        let directions: Vec<Vec<f64>> = if d == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..8)
                .map(|j| {
                    let a = std::f64::consts::PI * j as f64 / 4.0;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        };
        let step = (grid.len() / 2048).max(1);
        for index in (0..grid.len()).step_by(step) {
            let z = grid.point(index);
            for dir in &directions {
                for s in 0..=20 {
                    let r = q_max * s as f64 / 20.0;
                    let mut q: Vec<f64> = dir.iter().map(|x| r * x).collect();
                    q.push(0.0);
                    let shifted: Vec<f64> = q[..d].iter().zip(momentum).map(|(a, b)| a + b).collect();
                    let b = self.drift_diffusion(1.0, &z, &[shifted, vec![0.0]].concat())?.b;
                    let bound = chi.eval(norm(&q));
                    if b.abs() > bound * (1.0 + 1e-12) + 1e-12 {
                        return Err(Error::ChiVerification {
                            z,
                            q,
                            b,
                            bound,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl Hamiltonian for MechanicalHamiltonian {
    fn dim(&self) -> usize {
        self.d
    }

    fn evaluate(&self, z: &[f64], p: &[f64]) -> HamiltonianEval {
        let d = self.d;
        let lam = self.lambda;
        let hp = self.velocity(z, p);
        let deta = self.eta_prime_at(z[d]);
        let h = self.hamiltonian(z, p);
        let h_x = DVector::from_iterator(d, (0..d).map(|i| lam * self.v.partial(z, i)));
        let h_t = hp.iter().zip(&deta).map(|(v, e)| v * lam * e).sum::<f64>() + lam * self.v.partial(z, d);
        HamiltonianEval {
            h,
            h_p: DVector::from_vec(hp),
            h_pp: DMatrix::identity(d, d),
            h_x,
            h_t,
        }
    }

    fn lagrangian(&self, z: &[f64], v: &[f64]) -> f64 {
        let eta = self.eta_at(z[self.d]);
        let kinetic = 0.5 * v.iter().map(|x| x * x).sum::<f64>();
        let drift = v.iter().zip(&eta).map(|(a, b)| a * b).sum::<f64>();
        kinetic - self.lambda * drift - self.lambda * self.v.eval(z)
    }

    fn trace_h_px(&self, _z: &[f64], _p: &[f64]) -> f64 {
        0.0
    }
}

/// `chi(s) = c s + d0`, a linear majorant of `|b_k(z, q)|` in `|q|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiParams {
    pub c: f64,
    pub d0: f64,
}

impl ChiParams {
    pub fn eval(&self, s: f64) -> f64 {
        self.c * s + self.d0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `eta`, `eta'`, `V`, `grad V` and `V_t` sampled on a grid, unscaled by lambda.
#[derive(Clone, Debug)]
pub(crate) struct SampledHamiltonian {
    pub eta: Vec<Vec<f64>>,
    pub eta_prime: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub grad_v: Vec<Vec<f64>>,
    pub v_t: Vec<f64>,
}

impl SampledHamiltonian {
    pub fn new(ham: &MechanicalHamiltonian, grid: &TorusGrid) -> Self {
        let d = ham.d;
        let n_t = grid.n_t();
        let times: Vec<f64> = (0..n_t).map(|j| j as f64 / n_t as f64).collect();
        let series = |f: &dyn Fn(&FourierSpec, f64) -> f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|i| {
                    times
                        .iter()
                        .map(|&t| ham.eta.get(i).map_or(0.0, |e| f(e, t)))
                        .collect()
                })
                .collect()
        };
        let eta = series(&|e, t| e.eval(&[t]));
        let eta_prime = series(&|e, t| e.partial(&[t], 0));
        let points: Vec<Vec<f64>> = grid.points().collect();
        let v = points.iter().map(|z| ham.v.eval(z)).collect();
        let grad_v = (0..d)
            .map(|i| points.iter().map(|z| ham.v.partial(z, i)).collect())
            .collect();
        let v_t = points.iter().map(|z| ham.v.partial(z, d)).collect();
        SampledHamiltonian {
            eta,
            eta_prime,
            v,
            grad_v,
            v_t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn forced() -> MechanicalHamiltonian {
        MechanicalHamiltonian::new(
            1,
            vec![FourierSpec::cosine(vec![1], 0.6).plus(FourierSpec::sine(vec![2], 0.2))],
            FourierSpec::cosine(vec![1, 0], 1.0).plus(FourierSpec::sine(vec![1, -1], 0.4)),
        )
        .unwrap()
    }

    #[test]
    fn free_particle_values() {
        let e = MechanicalHamiltonian::free(1).evaluate(&[0.3, 0.4], &[1.0]);
        assert_eq!(e.h, 0.5);
        assert_eq!(e.h_p[0], 1.0);
        assert_eq!(e.h_pp[(0, 0)], 1.0);
        assert_eq!(e.h_x[0], 0.0);
        assert_eq!(e.h_t, 0.0);
    }

    #[test]
    fn periodic_drift_values() {
        let e = MechanicalHamiltonian::periodic_drift(1.0).evaluate(&[0.0, 0.0], &[0.0]);
        assert_abs_diff_eq!(e.h, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.h_p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.h_t, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pendulum_values() {
        let e = MechanicalHamiltonian::pendulum(1.0).evaluate(&[0.25, 0.0], &[1.0]);
        assert_abs_diff_eq!(e.h, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.h_x[0], -2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for ham in [forced(), forced().with_lambda(0.3)] {
            for _ in 0..100 {
                let z = [rng.gen::<f64>(), rng.gen::<f64>()];
                let p = [rng.gen_range(-3.0..3.0)];
                let e = ham.evaluate(&z, &p);
                let h = 1e-6;
                let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
                let fd_p = (ham.hamiltonian(&z, &[p[0] + h]) - ham.hamiltonian(&z, &[p[0] - h])) / (2.0 * h);
                let fd_x = (ham.hamiltonian(&[z[0] + h, z[1]], &p) - ham.hamiltonian(&[z[0] - h, z[1]], &p)) / (2.0 * h);
                let fd_t = (ham.hamiltonian(&[z[0], z[1] + h], &p) - ham.hamiltonian(&[z[0], z[1] - h], &p)) / (2.0 * h);
                assert!(rel(e.h_p[0], fd_p) < 1e-7);
                assert!(rel(e.h_x[0], fd_x) < 1e-7);
                assert!(rel(e.h_t, fd_t) < 1e-7);
            }
        }
    }

    #[test]
    fn lagrangian_closed_form() {
        let free = MechanicalHamiltonian::free(1);
        assert_eq!(free.lagrangian(&[0.1, 0.2], &[3.0]), 4.5);
        let both = MechanicalHamiltonian::new(
            1,
            vec![FourierSpec::cosine(vec![1], 1.0)],
            FourierSpec::cosine(vec![1, 0], 1.0),
        )
        .unwrap();
        assert_abs_diff_eq!(both.lagrangian(&[0.0, 0.0], &[2.0]), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn fenchel_equality_and_inequality() {
        let ham = forced();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let z = [rng.gen::<f64>(), rng.gen::<f64>()];
            let p = [rng.gen_range(-2.0..2.0)];
            let e = ham.evaluate(&z, &p);
            let v = [e.h_p[0]];
            assert!((ham.lagrangian(&z, &v) + e.h - p[0] * v[0]).abs() <= 1e-12);
            let gap = (0..=4000)
                .map(|j| {
                    let w = -10.0 + 20.0 * j as f64 / 4000.0;
                    ham.lagrangian(&z, &[w]) + e.h - p[0] * w
                })
                .fold(f64::INFINITY, f64::min);
            assert!((-1e-9..=1e-3).contains(&gap), "gap {gap}");
        }
    }

    #[test]
    fn diffusion_factorizes_and_drift_is_k_independent() {
        let ham = forced();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let z = [rng.gen::<f64>(), rng.gen::<f64>()];
            let q = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let k = rng.gen_range(0.5..100.0);
            let dd = ham.drift_diffusion(k, &z, &q).unwrap();
            let diff = (&dd.a - &dd.sigma * dd.sigma.transpose()).abs().max();
            assert!(diff <= 1e-14, "{diff}");
            assert!(dd.a.clone().cholesky().is_some());
            let b_big = ham.drift_diffusion(1e6, &z, &q).unwrap().b;
            assert_eq!(dd.b, b_big);
        }
    }

    #[test]
    fn trivial_diffusion() {
        let dd = MechanicalHamiltonian::free(1).drift_diffusion(4.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(dd.a, DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]));
        assert_eq!(dd.b, 0.0);
        assert!(MechanicalHamiltonian::free(1).drift_diffusion(0.0, &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn pendulum_drift() {
        let ham = MechanicalHamiltonian::pendulum(1.0);
        for k in [1.0, 100.0] {
            let b = ham.drift_diffusion(k, &[0.25, 0.0], &[1.0, 0.0]).unwrap().b;
            assert_abs_diff_eq!(b, -2.0 * PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_examples() {
        let grid = TorusGrid::new(1, 16, 16).unwrap();
        let chi = MechanicalHamiltonian::free(1).chi_bound(&grid).unwrap();
        assert_eq!((chi.c, chi.d0), (0.0, 0.0));
        let chi = MechanicalHamiltonian::pendulum(1.0).chi_bound(&grid).unwrap();
        assert_abs_diff_eq!(chi.c, 2.0 * PI, epsilon = 1e-12);
        assert_eq!(chi.d0, 0.0);
        let chi = MechanicalHamiltonian::periodic_drift(1.0).chi_bound(&grid).unwrap();
        assert_abs_diff_eq!(chi.c, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(chi.d0, 2.0 * PI, epsilon = 1e-12);
        assert!(forced().chi_bound(&grid).is_ok());
    }

    #[test]
    fn validation() {
        assert!(MechanicalHamiltonian::pendulum(1.0).with_lambda(1.5).validate().is_err());
        let bad = MechanicalHamiltonian::new(1, vec![], FourierSpec::cosine(vec![1], 1.0));
        assert!(bad.is_err());
        let grid = TorusGrid::new(1, 4, 4).unwrap();
        assert!(matches!(
            MechanicalHamiltonian::pendulum(1.0)
                .with_lambda(1.0)
                .check_grid(&TorusGrid::new(1, 2, 4).unwrap()),
            Err(Error::Nyquist { .. })
        ));
        assert!(MechanicalHamiltonian::pendulum(1.0).check_grid(&grid).is_ok());
    }

    #[test]
    fn json_schema() {
        let text = r#"{"d":1,"eta":[[{"freq":[1],"cos":1.0,"sin":0.0}]],"V":[],"lambda":1.0}"#;
        let ham: MechanicalHamiltonian = serde_json::from_str(text).unwrap();
        assert_eq!(ham, MechanicalHamiltonian::periodic_drift(1.0));
        assert!(serde_json::from_str::<MechanicalHamiltonian>(r#"{"d":1,"eta":[]}"#).is_err());
    }
}
