//! Uniform periodic grids on the space-time torus `T^{d+1}` and real fields on them.
//!
//! Nodes are laid out row-major with the time axis last, so for `d = 1` the
//! node `(i, j)` at `x = i / n_x`, `t = j / n_t` lives at `i * n_t + j`. Every
//! axis has period one, which makes the quadrature rule a plain mean.
//!
//! Two first-derivative stencils are provided. The spectral one multiplies
//! Fourier coefficients by `2 pi i k` and drops the Nyquist mode, so it is exact
//! for trigonometric polynomials below Nyquist and its matrix is exactly
//! skew-symmetric. The fourth-order central stencil is skew-symmetric too, which
//! keeps `mean(g * Df) = -mean(f * Dg)` for both.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First-derivative discretization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffMethod {
    #[default]
    Spectral,
    /// Spectral differentiation with the 2/3-rule filter applied to the result.
    SpectralDealiased,
    Central4,
}

impl DiffMethod {
    /// Symbol of the derivative (divided by `i`) for wavenumber index `j` on an
    /// axis of `n` points.
    pub fn symbol(self, j: usize, n: usize) -> f64 {
        if n <= 1 || 2 * j == n {
            return 0.0;
        }
        let wave = signed_wavenumber(j, n);
        match self {
            DiffMethod::Spectral => 2.0 * PI * wave as f64,
            DiffMethod::SpectralDealiased => {
                if 3 * wave.unsigned_abs() as usize > n {
                    0.0
                } else {
                    2.0 * PI * wave as f64
                }
            }
            DiffMethod::Central4 => {
                let theta = 2.0 * PI * j as f64 / n as f64;
                n as f64 * (8.0 * theta.sin() - (2.0 * theta).sin()) / 6.0
            }
        }
    }
}

fn signed_wavenumber(j: usize, n: usize) -> i64 {
    if 2 * j <= n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

struct Plans {
    x_forward: Arc<dyn Fft<f64>>,
    x_inverse: Arc<dyn Fft<f64>>,
    t_forward: Arc<dyn Fft<f64>>,
    t_inverse: Arc<dyn Fft<f64>>,
}

/// Uniform sampling of the unit torus `T^d x T` (space then time).
#[derive(Clone)]
pub struct TorusGrid {
    d: usize,
    n_x: usize,
    n_t: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("d", &self.d)
            .field("n_x", &self.n_x)
            .field("n_t", &self.n_t)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n_x == other.n_x && self.n_t == other.n_t
    }
}

impl Eq for TorusGrid {}

impl TorusGrid {
    /// `d` spatial axes with `n_x` points each and `n_t` temporal points.
    ///
    /// Point counts must be even; `n_t = 1` is accepted and collapses the time
    /// axis (the autonomous problem).
    pub fn new(d: usize, n_x: usize, n_t: usize) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::InvalidGrid(format!("spatial dimension {d} not in {{1, 2}}")));
        }
        for (name, n) in [("n_x", n_x), ("n_t", n_t)] {
            if n == 0 || (n > 1 && n % 2 != 0) {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even (or 1)")));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            x_forward: planner.plan_fft_forward(n_x),
            x_inverse: planner.plan_fft_inverse(n_x),
            t_forward: planner.plan_fft_forward(n_t),
            t_inverse: planner.plan_fft_inverse(n_t),
        };
        Ok(TorusGrid {
            d,
            n_x,
            n_t,
            plans: Arc::new(plans),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Number of axes, `d + 1`.
    pub fn axes(&self) -> usize {
        self.d + 1
    }

    pub fn time_axis(&self) -> usize {
        self.d
    }

    /// Total node count `n_x^d * n_t`.
    pub fn len(&self) -> usize {
        self.n_x.pow(self.d as u32) * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        if axis < self.d {
            self.n_x
        } else {
            self.n_t
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.axis_len(axis) as f64
    }

    fn stride(&self, axis: usize) -> usize {
        (axis + 1..self.axes()).map(|a| self.axis_len(a)).product()
    }

    /// Integer coordinates of a node, time last.
    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes()];
        let mut rest = index;
        for axis in (0..self.axes()).rev() {
            let n = self.axis_len(axis);
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn time_index(&self, index: usize) -> usize {
        index % self.n_t
    }

    /// Node coordinates `z = (x_1, .., x_d, t)` in `[0, 1)^{d+1}`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .into_iter()
            .enumerate()
            .map(|(axis, j)| j as f64 / self.axis_len(axis) as f64)
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Trapezoidal rule on the unit torus: the mean of the node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    /// Discrete `L^2(T^{d+1})` inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.axes() {
            return Err(Error::AxisOutOfRange {
                axis,
                axes: self.axes(),
            });
        }
        Ok(())
    }

    pub fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(())
    }

    /// Partial derivative of raw node values along `axis`, written into `out`.
    ///
    /// Does not validate `f`; callers that accept user data go through
    /// [`partial_derivative`].
    pub fn derivative_into(&self, f: &[f64], axis: usize, method: DiffMethod, out: &mut [f64]) {
        let n = self.axis_len(axis);
        if n == 1 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        match method {
            DiffMethod::Central4 => self.central4(f, axis, out),
            _ => self.spectral(f, axis, method, out),
        }
    }

    pub fn derivative(&self, f: &[f64], axis: usize, method: DiffMethod) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.derivative_into(f, axis, method, &mut out);
        out
    }

    fn line_starts(&self, axis: usize) -> impl Iterator<Item = usize> {
        let n = self.axis_len(axis);
        let stride = self.stride(axis);
        let outer = self.len() / (n * stride);
        (0..outer).flat_map(move |o| (0..stride).map(move |i| o * n * stride + i))
    }

    fn central4(&self, f: &[f64], axis: usize, out: &mut [f64]) {
        let n = self.axis_len(axis);
        let stride = self.stride(axis);
        let scale = n as f64 / 12.0;
        for start in self.line_starts(axis) {
            let at = |j: usize| f[start + (j % n) * stride];
            for j in 0..n {
                let value = 8.0 * (at(j + 1) - at(j + n - 1)) - (at(j + 2) - at(j + n - 2));
                out[start + j * stride] = scale * value;
            }
        }
    }

    fn plans(&self, axis: usize) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        if axis < self.d {
            (&self.plans.x_forward, &self.plans.x_inverse)
        } else {
            (&self.plans.t_forward, &self.plans.t_inverse)
        }
    }

    fn gather(&self, f: &[f64], axis: usize) -> Vec<Complex64> {
        let n = self.axis_len(axis);
        let stride = self.stride(axis);
        let mut buf = Vec::with_capacity(self.len());
        for start in self.line_starts(axis) {
            buf.extend((0..n).map(|j| Complex64::new(f[start + j * stride], 0.0)));
        }
        buf
    }

    fn spectral(&self, f: &[f64], axis: usize, method: DiffMethod, out: &mut [f64]) {
        let n = self.axis_len(axis);
        let stride = self.stride(axis);
        let (forward, inverse) = self.plans(axis);
        let mut buf = self.gather(f, axis);
        forward.process(&mut buf);
        let symbols: Vec<f64> = (0..n).map(|j| method.symbol(j, n) / n as f64).collect();
        for line in buf.chunks_exact_mut(n) {
            for (c, s) in line.iter_mut().zip(&symbols) {
                // multiply by i * s
                *c = Complex64::new(-c.im * s, c.re * s);
            }
        }
        inverse.process(&mut buf);
        for (line, start) in buf.chunks_exact(n).zip(self.line_starts(axis)) {
            for (j, c) in line.iter().enumerate() {
                out[start + j * stride] = c.re;
            }
        }
    }

    /// In-place multidimensional complex FFT over every axis (unnormalized).
    pub fn fft_nd(&self, data: &mut [Complex64], inverse: bool) {
        for axis in 0..self.axes() {
            let n = self.axis_len(axis);
            if n == 1 {
                continue;
            }
            let stride = self.stride(axis);
            let (forward, backward) = self.plans(axis);
            let plan = if inverse { backward } else { forward };
            let starts: Vec<usize> = self.line_starts(axis).collect();
            let mut buf = Vec::with_capacity(self.len());
            for &start in &starts {
                buf.extend((0..n).map(|j| data[start + j * stride]));
            }
            plan.process(&mut buf);
            for (line, &start) in buf.chunks_exact(n).zip(&starts) {
                for (j, c) in line.iter().enumerate() {
                    data[start + j * stride] = *c;
                }
            }
        }
    }
}

/// A real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_values(&values)?;
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f(z)` at every node, `z = (x_1, .., x_d, t)`.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.points().map(|z| f(&z)).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn partial(&self, axis: usize, method: DiffMethod) -> Result<ScalarField> {
        partial_derivative(self, axis, method)
    }

    pub fn project_zero_mean(&self) -> ScalarField {
        project_zero_mean(self)
    }
}

/// One real component per axis per node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: &TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        for c in &components {
            grid.check_values(c)?;
        }
        Ok(VectorField {
            grid: grid.clone(),
            components,
        })
    }

    /// Space-time gradient `Du = (grad u, u_t)`.
    pub fn space_time_gradient(f: &ScalarField, method: DiffMethod) -> Result<Self> {
        let grid = f.grid();
        let components = (0..grid.axes())
            .map(|axis| partial_derivative(f, axis, method).map(ScalarField::into_values))
            .collect::<Result<_>>()?;
        Ok(VectorField {
            grid: grid.clone(),
            components,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        ScalarField::from_raw(&self.grid, values)
    }
}

pub fn partial_derivative(f: &ScalarField, axis: usize, method: DiffMethod) -> Result<ScalarField> {
    let grid = f.grid();
    grid.check_axis(axis)?;
    grid.check_values(f.values())?;
    Ok(ScalarField::from_raw(grid, grid.derivative(f.values(), axis, method)))
}

pub fn integrate(f: &ScalarField) -> f64 {
    f.integrate()
}

pub fn project_zero_mean(f: &ScalarField) -> ScalarField {
    let mean = f.integrate();
    ScalarField::from_raw(f.grid(), f.values().iter().map(|v| v - mean).collect())
}

pub(crate) fn project_in_place(grid: &TorusGrid, values: &mut [f64]) {
    let mean = grid.integrate(values);
    values.iter_mut().for_each(|v| *v -= mean);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n_x: usize, n_t: usize) -> TorusGrid {
        TorusGrid::new(1, n_x, n_t).unwrap()
    }

    #[test]
    fn layout_is_time_last() {
        let g = grid(4, 6);
        assert_eq!(g.len(), 24);
        assert_eq!(g.point(7), vec![0.25, 1.0 / 6.0]);
        assert_eq!(g.multi_index(7), vec![1, 1]);
        let g2 = TorusGrid::new(2, 4, 2).unwrap();
        assert_eq!(g2.len(), 32);
        assert_eq!(g2.multi_index(2 * 8 + 3 * 2 + 1), vec![2, 3, 1]);
    }

    #[test]
    fn rejects_odd_counts_and_bad_dimension() {
        assert!(TorusGrid::new(1, 15, 8).is_err());
        assert!(TorusGrid::new(3, 8, 8).is_err());
        assert!(TorusGrid::new(1, 8, 1).is_ok());
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = grid(16, 2);
        let f = ScalarField::from_fn(&g, |z| (2.0 * PI * z[0]).sin());
        let df = f.partial(0, DiffMethod::Spectral).unwrap();
        for (i, z) in g.points().enumerate() {
            assert_abs_diff_eq!(df.values()[i], 2.0 * PI * (2.0 * PI * z[0]).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(8, 8);
        let f = ScalarField::constant(&g, 1.0);
        for method in [DiffMethod::Spectral, DiffMethod::Central4] {
            for axis in 0..2 {
                let df = f.partial(axis, method).unwrap();
                assert!(df.values().iter().all(|v| v.abs() < 1e-14));
            }
        }
    }

    #[test]
    fn time_derivative_of_product() {
        let g = grid(8, 32);
        let f = ScalarField::from_fn(&g, |z| (2.0 * PI * z[0]).cos() * (4.0 * PI * z[1]).cos());
        let df = f.partial(1, DiffMethod::Spectral).unwrap();
        let exact = ScalarField::from_fn(&g, |z| -4.0 * PI * (2.0 * PI * z[0]).cos() * (4.0 * PI * z[1]).sin());
        assert!(df.max_abs_diff(&exact).unwrap() <= 1e-10);
    }

    #[test]
    fn central4_is_fourth_order() {
        let err = |n: usize| {
            let g = grid(n, 2);
            let f = ScalarField::from_fn(&g, |z| (2.0 * PI * z[0]).sin());
            let df = f.partial(0, DiffMethod::Central4).unwrap();
            let exact = ScalarField::from_fn(&g, |z| 2.0 * PI * (2.0 * PI * z[0]).cos());
            df.max_abs_diff(&exact).unwrap()
        };
        let ratio = err(32) / err(64);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn dealiasing_removes_high_modes() {
        let g = grid(12, 2);
        let f = ScalarField::from_fn(&g, |z| (2.0 * PI * 5.0 * z[0]).sin());
        let df = f.partial(0, DiffMethod::SpectralDealiased).unwrap();
        assert!(df.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn collapsed_time_axis_has_zero_derivative() {
        let g = grid(8, 1);
        let f = ScalarField::from_fn(&g, |z| z[0].sin());
        let dt = f.partial(1, DiffMethod::Spectral).unwrap();
        assert!(dt.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadrature_examples() {
        let g = grid(4, 2);
        assert_eq!(ScalarField::constant(&g, 1.0).integrate(), 1.0);
        let s = ScalarField::from_fn(&grid(16, 2), |z| (2.0 * PI * z[0]).sin());
        assert!(s.integrate().abs() <= 1e-15);
        let c2 = ScalarField::from_fn(&g, |z| (2.0 * PI * z[0]).cos().powi(2));
        assert_abs_diff_eq!(c2.integrate(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_mean_projection() {
        let g = grid(16, 2);
        let five = ScalarField::constant(&g, 5.0).project_zero_mean();
        assert!(five.values().iter().all(|&v| v == 0.0));
        let f = ScalarField::from_fn(&g, |z| 2.0 + (2.0 * PI * z[0]).sin());
        let expected = ScalarField::from_fn(&g, |z| (2.0 * PI * z[0]).sin());
        let projected = f.project_zero_mean();
        assert!(projected.max_abs_diff(&expected).unwrap() <= 1e-14);
        assert!(projected.project_zero_mean().max_abs_diff(&projected).unwrap() <= 1e-16);
    }

    #[test]
    fn errors_on_bad_axis_and_non_finite() {
        let g = grid(4, 4);
        let f = ScalarField::zeros(&g);
        assert!(matches!(f.partial(2, DiffMethod::Spectral), Err(Error::AxisOutOfRange { .. })));
        let mut values = vec![0.0; g.len()];
        values[3] = f64::NAN;
        assert!(matches!(ScalarField::new(&g, values), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn fft_nd_round_trip() {
        let g = TorusGrid::new(2, 4, 6).unwrap();
        let orig: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut data = orig.clone();
        g.fft_nd(&mut data, false);
        g.fft_nd(&mut data, true);
        for (a, b) in data.iter().zip(&orig) {
            assert_abs_diff_eq!(a.re / g.len() as f64, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im / g.len() as f64, b.im, epsilon = 1e-12);
        }
    }
}
