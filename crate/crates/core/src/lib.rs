//! Time-periodic Evans minimization on the space-time torus.

pub mod check;
pub mod cli;
pub mod diagnostics;
pub mod effective;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod mather;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{FourierSpec, FourierTerm};
pub use grid::{DiffMethod, ScalarField, TorusGrid, VectorField};
pub use hamiltonian::{ChiParams, Hamiltonian, MechanicalHamiltonian};
pub use solver::{lipschitz_bound, solve, solve_k_continuation, EvansSolver, LipschitzCertificate, SolveResult, SolverConfig};
