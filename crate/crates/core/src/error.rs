use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a torus with {axes} axes")]
    AxisOutOfRange { axis: usize, axes: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("field length {got} does not match grid point count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("frequency {freq} on axis {axis} is not below the Nyquist limit of {n} points")]
    Nyquist { axis: usize, freq: i64, n: usize },

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// |b_k(z, q)| exceeded c|q| + d0 at a sampled point.
    #[error("chi bound violated at z={z:?}, q={q:?}: |b_k|={b} > {bound}")]
    ChiVerification {
        z: Vec<f64>,
        q: Vec<f64>,
        b: f64,
        bound: f64,
    },

    #[error("line search failed at newton iteration {iteration} (gradient norm {grad_norm:e}, lambda {lambda})")]
    LineSearch {
        iteration: usize,
        grad_norm: f64,
        lambda: f64,
    },

    /// Midpoint convexity failed at the triple centred on `index`.
    #[error("table is not convex at index {index}: f[i-1]={left}, f[i]={center}, f[i+1]={right}")]
    NonConvex {
        index: usize,
        left: f64,
        center: f64,
        right: f64,
    },

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoStream(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
