//! Effective Hamiltonian tables `P -> hbar_k(P)`, their discrete Legendre
//! duals, and convexity / rotation-vector checks.

use std::io::Write;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::hamiltonian::MechanicalHamiltonian;
use crate::solver::{EvansSolver, SolverConfig};

/// Slack allowed by the convexity pre-check of [`legendre_transform`].
pub const CONVEXITY_TOL: f64 = 1e-6;

/// `n` points `min, min + step, ...` up to `max` (inclusive when it lands on the grid).
pub fn uniform_points(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidConfig(format!("bad uniform grid [{min}, {max}] step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

/// Tensor grid of momenta, one list per axis; points are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub axes: Vec<Vec<f64>>,
}

impl MomentumGrid {
    pub fn line(values: Vec<f64>) -> Self {
        MomentumGrid { axes: vec![values] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::InvalidConfig(format!("momentum grid has {} axes, expected {d}", self.dim())));
        }
        for axis in &self.axes {
            if axis.is_empty() || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidConfig("momentum axes must be non-empty and increasing".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Warm-started continuation in `P`.
    #[default]
    Sequential,
    /// Independent cold starts spread over threads.
    Parallel { jobs: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTable {
    pub k: f64,
    pub grid: MomentumGrid,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub hbar: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
}

struct Entry {
    hbar: f64,
    q: Vec<f64>,
    converged: bool,
    u: Option<ScalarField>,
}

fn solve_entry(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig, p: &[f64], warm: Option<&ScalarField>) -> Result<Entry> {
    let solver = EvansSolver::new(grid, ham, &config.clone().with_momentum(p.to_vec()))?;
    match solver.minimize(warm) {
        Ok(r) => Ok(Entry {
            hbar: r.hbar,
            q: solver.rotation_vector(&r.u)?,
            converged: r.converged,
            u: Some(r.u),
        }),
        // numerical failures are flagged, the sweep continues
        Err(Error::LineSearch { .. }) => Ok(Entry {
            hbar: f64::NAN,
            q: vec![f64::NAN; p.len()],
            converged: false,
            u: None,
        }),
        Err(e) => Err(e),
    }
}

/// `hbar_k(P)` and `Q(P) = mean(m H_p)` on every node of `momenta`.
pub fn sweep_p(grid: &TorusGrid, ham: &MechanicalHamiltonian, config: &SolverConfig, momenta: &MomentumGrid, mode: SweepMode) -> Result<EffectiveTable> {
    momenta.validate(ham.d)?;
    // surface configuration errors before any work is spawned
    EvansSolver::new(grid, ham, config)?;
    let points = momenta.points();
    let entries: Vec<Entry> = match mode {
        SweepMode::Sequential => {
            let mut out: Vec<Entry> = Vec::with_capacity(points.len());
            for p in &points {
                let warm = out.last().and_then(|e| e.u.as_ref().filter(|_| e.converged));
                let entry = solve_entry(grid, ham, config, p, warm)?;
                out.push(entry);
            }
            out
        }
        SweepMode::Parallel { jobs } => {
            let jobs = jobs.max(1).min(points.len());
            let chunk = points.len().div_ceil(jobs);
            thread::scope(|scope| {
                let handles: Vec<_> = points
                    .chunks(chunk)
                    .map(|block| {
                        scope.spawn(move || {
                            block
                                .iter()
                                .map(|p| solve_entry(grid, ham, config, p, None).map(|mut e| {
                                    e.u = None;
                                    e
                                }))
                                .collect::<Result<Vec<_>>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sweep worker panicked"))
                    .collect::<Result<Vec<Vec<Entry>>>>()
            })?
            .into_iter()
            .flatten()
            .collect()
        }
    };
    Ok(EffectiveTable {
        k: config.k,
        grid: momenta.clone(),
        hbar: entries.iter().map(|e| e.hbar).collect(),
        q: entries.iter().map(|e| e.q.clone()).collect(),
        converged: entries.iter().map(|e| e.converged).collect(),
        p: points,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn component_names(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (0..d).map(|i| format!("{prefix}_{i}")).collect()
    }
}

impl EffectiveTable {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Lines of the table along each momentum axis, as lists of flat indices.
    fn lines(&self) -> Vec<Vec<usize>> {
        let shape = self.grid.shape();
        let mut lines = Vec::new();
        for axis in 0..shape.len() {
            let stride: usize = shape[axis + 1..].iter().product();
            for start in 0..self.grid.len() {
                if (start / stride).is_multiple_of(shape[axis]) {
                    lines.push((0..shape[axis]).map(|j| start + j * stride).collect());
                }
            }
        }
        lines
    }

    /// Convexity along every momentum axis, over converged entries only.
    pub fn convexity(&self) -> ConvexityReport {
        let mut total = ConvexityReport::empty();
        for line in self.lines() {
            if line.iter().any(|&i| !self.converged[i]) {
                continue;
            }
            let values: Vec<f64> = line.iter().map(|&i| self.hbar[i]).collect();
            let mut rep = convexity_check(&values);
            rep.worst_index = rep.worst_index.map(|j| line[j]);
            total.merge(rep);
        }
        total
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.grid.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = component_names("P", d);
        header.push("hbar".into());
        header.extend(component_names("Q", d));
        header.push("converged".into());
        w.write_record(&header)?;
        for i in 0..self.p.len() {
            let mut row: Vec<String> = self.p[i].iter().map(|x| format!("{x:?}")).collect();
            row.push(format!("{:?}", self.hbar[i]));
            row.extend(self.q[i].iter().map(|x| format!("{x:?}")));
            row.push(self.converged[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// `max_i f_i - (f_{i-1} + f_{i+1}) / 2`.
    pub max_violation: f64,
    /// `min_i f_{i-1} - 2 f_i + f_{i+1}`.
    pub margin: f64,
    /// Center of the worst triple.
    pub worst_index: Option<usize>,
}

impl ConvexityReport {
    fn empty() -> Self {
        ConvexityReport {
            max_violation: f64::NEG_INFINITY,
            margin: f64::INFINITY,
            worst_index: None,
        }
    }

    fn merge(&mut self, other: ConvexityReport) {
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.worst_index = other.worst_index;
        }
        self.margin = self.margin.min(other.margin);
    }
}

/// Midpoint-convexity violation and strict-convexity margin of samples on a
/// uniform grid.
pub fn convexity_check(values: &[f64]) -> ConvexityReport {
    let mut rep = ConvexityReport::empty();
    for (j, w) in values.windows(3).enumerate() {
        let violation = w[1] - 0.5 * (w[0] + w[2]);
        if violation > rep.max_violation {
            rep.max_violation = violation;
            rep.worst_index = Some(j + 1);
        }
        rep.margin = rep.margin.min(w[0] - 2.0 * w[1] + w[2]);
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreTable {
    #[serde(rename = "Q_grid")]
    pub q_grid: Vec<Vec<f64>>,
    pub lbar: Vec<f64>,
}

impl LegendreTable {
    /// `max_Q P . Q - lbar(Q)` at each of `momenta`.
    pub fn conjugate(&self, momenta: &[Vec<f64>]) -> Vec<f64> {
        momenta
            .iter()
            .map(|p| {
                self.q_grid
                    .iter()
                    .zip(&self.lbar)
                    .map(|(q, l)| dot(p, q) - l)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.q_grid.first().map_or(1, Vec::len);
        let mut w = csv::Writer::from_writer(out);
        let mut header = component_names("Q", d);
        header.push("lbar".into());
        w.write_record(&header)?;
        for (q, l) in self.q_grid.iter().zip(&self.lbar) {
            let mut row: Vec<String> = q.iter().map(|x| format!("{x:?}")).collect();
            row.push(format!("{l:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `lbar(Q) = max_P P . Q - hbar(P)` over converged table entries, after
/// checking the table is convex to [`CONVEXITY_TOL`].
pub fn legendre_transform(table: &EffectiveTable, q_grid: &[Vec<f64>]) -> Result<LegendreTable> {
    let convexity = table.convexity();
    if convexity.max_violation > CONVEXITY_TOL {
        let index = convexity.worst_index.unwrap_or(0);
        let line = table
            .lines()
            .into_iter()
            .find(|l| l[1..l.len().saturating_sub(1)].contains(&index))
            .unwrap_or_default();
        let pos = line.iter().position(|&i| i == index).unwrap_or(0);
        let at = |j: usize| line.get(j).map_or(f64::NAN, |&i| table.hbar[i]);
        return Err(Error::NonConvex {
            index,
            left: at(pos.wrapping_sub(1)),
            center: at(pos),
            right: at(pos + 1),
        });
    }
    let d = table.grid.dim();
    if let Some(q) = q_grid.iter().find(|q| q.len() != d) {
        return Err(Error::InvalidConfig(format!("Q point {q:?} should have {d} components")));
    }
    let lbar = q_grid
        .iter()
        .map(|q| {
            table
                .p
                .iter()
                .zip(&table.hbar)
                .zip(&table.converged)
                .filter(|(_, &c)| c)
                .map(|((p, h), _)| dot(p, q) - h)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(LegendreTable {
        q_grid: q_grid.to_vec(),
        lbar,
    })
}

/// `min over table P and Legendre Q of hbar(P) + lbar(Q) - P . Q`.
pub fn fenchel_young_gap(table: &EffectiveTable, legendre: &LegendreTable) -> f64 {
    let mut gap = f64::INFINITY;
    for ((p, h), _) in table.p.iter().zip(&table.hbar).zip(&table.converged).filter(|(_, &c)| c) {
        for (q, l) in legendre.q_grid.iter().zip(&legendre.lbar) {
            gap = gap.min(h + l - dot(p, q));
        }
    }
    gap
}

/// `max |hbar - hbar**|` over converged entries whose rotation vector lies
/// strictly inside the span of the Legendre grid.
pub fn biconjugate_deviation(table: &EffectiveTable, legendre: &LegendreTable) -> f64 {
    let d = table.grid.dim();
    let bounds: Vec<(f64, f64)> = (0..d)
        .map(|a| {
            legendre
                .q_grid
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q[a]), hi.max(q[a])))
        })
        .collect();
    let interior: Vec<usize> = (0..table.p.len())
        .filter(|&i| table.converged[i] && table.q[i].iter().zip(&bounds).all(|(q, (lo, hi))| q > lo && q < hi))
        .collect();
    let momenta: Vec<Vec<f64>> = interior.iter().map(|&i| table.p[i].clone()).collect();
    legendre
        .conjugate(&momenta)
        .iter()
        .zip(&interior)
        .map(|(h2, &i)| (h2 - table.hbar[i]).abs())
        .fold(0.0, f64::max)
}

/// A uniform Q grid spanning the converged rotation vectors of a `d = 1` table.
pub fn default_q_grid(table: &EffectiveTable) -> Vec<Vec<f64>> {
    let qs: Vec<f64> = table
        .q
        .iter()
        .zip(&table.converged)
        .filter(|(_, &c)| c)
        .map(|(q, _)| q[0])
        .collect();
    let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = table.p.len().max(2);
    if !(hi > lo) {
        return vec![vec![lo]];
    }
    (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    /// `max |Q_i - (hbar_{i+1} - hbar_{i-1}) / (P_{i+1} - P_{i-1})|`.
    pub max_discrepancy: f64,
    pub worst_index: Option<usize>,
}

/// Compares stored `Q` with centered differences of `hbar` (`d = 1` only).
pub fn rotation_consistency(table: &EffectiveTable) -> Result<RotationReport> {
    if table.grid.dim() != 1 {
        return Err(Error::Precondition("rotation consistency needs a one-dimensional table".into()));
    }
    let mut rep = RotationReport {
        max_discrepancy: 0.0,
        worst_index: None,
    };
    for i in 1..table.p.len().saturating_sub(1) {
        if !(table.converged[i - 1] && table.converged[i] && table.converged[i + 1]) {
            continue;
        }
        let slope = (table.hbar[i + 1] - table.hbar[i - 1]) / (table.p[i + 1][0] - table.p[i - 1][0]);
        let gap = (table.q[i][0] - slope).abs();
        if gap > rep.max_discrepancy {
            rep.max_discrepancy = gap;
            rep.worst_index = Some(i);
        }
    }
    Ok(rep)
}
