use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

/// One term `cos * cos(2 pi freq.z) + sin * sin(2 pi freq.z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// A real trigonometric polynomial on a torus, as a list of terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourierSpec {
    pub terms: Vec<FourierTerm>,
}

impl FourierSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn cosine(freq: Vec<i64>, amplitude: f64) -> Self {
        FourierSpec {
            terms: vec![FourierTerm {
                freq,
                cos: amplitude,
                sin: 0.0,
            }],
        }
    }

    pub fn sine(freq: Vec<i64>, amplitude: f64) -> Self {
        FourierSpec {
            terms: vec![FourierTerm {
                freq,
                cos: 0.0,
                sin: amplitude,
            }],
        }
    }

    pub fn plus(mut self, other: FourierSpec) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0)
    }

    fn phase(freq: &[i64], z: &[f64]) -> f64 {
        2.0 * PI * freq.iter().zip(z).map(|(k, x)| *k as f64 * x).sum::<f64>()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = Self::phase(&t.freq, z);
                t.cos * th.cos() + t.sin * th.sin()
            })
            .sum()
    }

    pub fn partial(&self, z: &[f64], axis: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = Self::phase(&t.freq, z);
                2.0 * PI * t.freq[axis] as f64 * (t.sin * th.cos() - t.cos * th.sin())
            })
            .sum()
    }

    pub fn check_dimension(&self, dim: usize, what: &str) -> Result<()> {
        match self.terms.iter().find(|t| t.freq.len() != dim) {
            Some(t) => Err(Error::InvalidHamiltonian(format!(
                "{what}: frequency {:?} should have {dim} components",
                t.freq
            ))),
            None => Ok(()),
        }
    }

    /// Checks that every frequency is strictly below Nyquist on the grid axes
    /// named by `axes` (frequency component `i` maps to grid axis `axes[i]`).
    pub fn check_nyquist(&self, grid: &TorusGrid, axes: &[usize]) -> Result<()> {
        for t in &self.terms {
            if t.cos == 0.0 && t.sin == 0.0 {
                continue;
            }
            for (&freq, &axis) in t.freq.iter().zip(axes) {
                let n = grid.axis_len(axis);
                if 2 * freq.unsigned_abs() as usize >= n && freq != 0 {
                    return Err(Error::Nyquist { axis, freq, n });
                }
            }
        }
        Ok(())
    }

    /// True when no active term depends on the coordinate `axis`.
    pub fn independent_of(&self, axis: usize) -> bool {
        self.terms
            .iter()
            .all(|t| (t.cos == 0.0 && t.sin == 0.0) || t.freq.get(axis).is_none_or(|&k| k == 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn partials_match_finite_differences() {
        let spec = FourierSpec::cosine(vec![1, 2], 0.7).plus(FourierSpec::sine(vec![-2, 1], 0.3));
        let z = [0.13, 0.71];
        let h = 1e-6;
        for axis in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[axis] += h;
            zm[axis] -= h;
            let fd = (spec.eval(&zp) - spec.eval(&zm)) / (2.0 * h);
            assert_abs_diff_eq!(spec.partial(&z, axis), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn json_shape() {
        let spec: FourierSpec = serde_json::from_str(r#"[{"freq":[1,0],"cos":1.0,"sin":0.0}]"#).unwrap();
        assert_eq!(spec, FourierSpec::cosine(vec![1, 0], 1.0));
    }

    #[test]
    fn nyquist_is_strict() {
        let grid = TorusGrid::new(1, 8, 8).unwrap();
        assert!(FourierSpec::cosine(vec![3, 0], 1.0).check_nyquist(&grid, &[0, 1]).is_ok());
        assert!(matches!(
            FourierSpec::cosine(vec![4, 0], 1.0).check_nyquist(&grid, &[0, 1]),
            Err(Error::Nyquist { axis: 0, freq: 4, n: 8 })
        ));
        let collapsed = TorusGrid::new(1, 8, 1).unwrap();
        assert!(FourierSpec::cosine(vec![0, 1], 1.0).check_nyquist(&collapsed, &[0, 1]).is_err());
    }
}
