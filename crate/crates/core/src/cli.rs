//! The `evans` command line: configuration parsing, command dispatch and
//! run persistence.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration error,
//! 3 non-convergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::check::{run_checks, CheckOptions};
use crate::diagnostics::mfg_residuals;
use crate::effective::{
    biconjugate_deviation, default_q_grid, fenchel_young_gap, legendre_transform, rotation_consistency, sweep_p, uniform_points, MomentumGrid, SweepMode,
};
use crate::error::{Error, Result};
use crate::grid::{DiffMethod, TorusGrid};
use crate::hamiltonian::MechanicalHamiltonian;
use crate::io::{save_field, FieldFormat};
use crate::mather::{critical_momentum, k_sweep, mather_diagnostics, pendulum_reference};
use crate::solver::{scalar_or_vec, EvansSolver, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "evans", version, about = "Time-periodic Evans minimization on the space-time torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one cell problem and certify it.
    Solve(RunArgs),
    /// Tabulate the effective Hamiltonian over a momentum grid, with its Legendre dual.
    Sweep(RunArgs),
    /// Sweep k upward for one momentum and record limit diagnostics.
    Limit(RunArgs),
    /// Run the invariant battery.
    Check(CheckArgs),
    /// Classical effective Hamiltonian of a one-dimensional autonomous potential.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Spectral,
    Central4,
}

impl From<MethodArg> for DiffMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Spectral => DiffMethod::Spectral,
            MethodArg::Central4 => DiffMethod::Central4,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; more than one switches to independent cold starts.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FieldFormat,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Writes `check.json` here when given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_sign_error: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Config whose Hamiltonian supplies `V`; the pendulum `cos(2 pi x)` otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "p", allow_negative_numbers = true, num_args = 1.., required = true)]
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub d: Option<usize>,
    pub n_x: usize,
    pub n_t: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "P_grid", default)]
    pub p_grid: Option<Vec<Vec<f64>>>,
    #[serde(rename = "P_min", default, deserialize_with = "optional_vec")]
    pub p_min: Option<Vec<f64>>,
    #[serde(rename = "P_max", default, deserialize_with = "optional_vec")]
    pub p_max: Option<Vec<f64>>,
    #[serde(rename = "P_step", default)]
    pub p_step: Option<f64>,
    #[serde(rename = "Q_grid", default)]
    pub q_grid: Option<Vec<Vec<f64>>>,
}

fn optional_vec<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    scalar_or_vec(de).map(Some)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    #[serde(default = "default_k_list")]
    pub k_list: Vec<f64>,
}

fn default_k_list() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0, 64.0]
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig { k_list: default_k_list() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hamiltonian: MechanicalHamiltonian,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub limit: LimitConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The grid, after checking it matches the Hamiltonian and resolves its Fourier data.
    pub fn torus(&self) -> Result<TorusGrid> {
        let d = self.grid.d.unwrap_or(self.hamiltonian.d);
        if d != self.hamiltonian.d {
            return Err(Error::InvalidConfig(format!("grid.d = {d} but hamiltonian.d = {}", self.hamiltonian.d)));
        }
        let grid = TorusGrid::new(d, self.grid.n_x, self.grid.n_t)?;
        self.hamiltonian.validate()?;
        self.hamiltonian.check_grid(&grid)?;
        self.solver.validate(d)?;
        Ok(grid)
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        let d = self.hamiltonian.d;
        let s = &self.sweep;
        if let Some(points) = &s.p_grid {
            if d != 1 {
                return Err(Error::InvalidConfig("P_grid lists are supported for d = 1; use P_min/P_max/P_step".into()));
            }
            if let Some(p) = points.iter().find(|p| p.len() != 1) {
                return Err(Error::InvalidConfig(format!("P_grid entry {p:?} should have one component")));
            }
            return Ok(MomentumGrid::line(points.iter().map(|p| p[0]).collect()));
        }
        match (&s.p_min, &s.p_max, s.p_step) {
            (Some(lo), Some(hi), Some(step)) => {
                let expand = |v: &Vec<f64>| if v.len() == 1 { vec![v[0]; d] } else { v.clone() };
                let (lo, hi) = (expand(lo), expand(hi));
                if lo.len() != d || hi.len() != d {
                    return Err(Error::InvalidConfig(format!("P_min/P_max need {d} components")));
                }
                let axes = lo.iter().zip(&hi).map(|(a, b)| uniform_points(*a, *b, step)).collect::<Result<_>>()?;
                Ok(MomentumGrid { axes })
            }
            _ => Err(Error::InvalidConfig("sweep needs P_grid or P_min, P_max and P_step".into())),
        }
    }

    fn output_dir(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone().or_else(|| self.output.clone()).unwrap_or_else(|| PathBuf::from("evans-out"))
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LineSearch { .. } => EXIT_NONCONVERGED,
        Error::NonConvex { .. } | Error::ChiVerification { .. } => EXIT_INVARIANT,
        _ => EXIT_CONFIG,
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |buf| {
        serde_json::to_writer_pretty(&mut *buf, value)?;
        buf.push(b'\n');
        Ok(())
    })
}

fn configured(args: &RunArgs) -> Result<(RunConfig, TorusGrid, PathBuf)> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(m) = args.method {
        cfg.solver.method = m.into();
    }
    let grid = cfg.torus()?;
    let dir = cfg.output_dir(&args.out);
    prepare_dir(&dir)?;
    Ok((cfg, grid, dir))
}

fn cmd_solve(args: &RunArgs) -> Result<i32> {
    let (cfg, grid, dir) = configured(args)?;
    let solver = EvansSolver::new(&grid, &cfg.hamiltonian, &cfg.solver)?;
    let result = solver.minimize(None)?;
    let residuals = mfg_residuals(&solver, &result)?;
    let mather = mather_diagnostics(&solver, &result)?;
    let certificate = solver.lipschitz_certificate()?;
    let (lower, upper) = solver.hbar_bounds();
    let ext = args.format.extension();
    save_field(&result.u, &dir.join(format!("u.{ext}")), args.format)?;
    save_field(&result.m, &dir.join(format!("m.{ext}")), args.format)?;
    write_json(
        &dir.join("solve.json"),
        &json!({
            "metadata": result.metadata(),
            "grid": {"d": grid.d(), "n_x": grid.n_x(), "n_t": grid.n_t()},
            "solver": cfg.solver,
            "residuals": residuals,
            "mather": mather,
            "lipschitz_certificate": certificate,
            "hbar_bounds": [lower, upper],
            "fields": {"u": format!("u.{ext}"), "m": format!("m.{ext}"), "format": args.format},
        }),
    )?;
    println!("hbar = {} (converged: {}, |g| = {:e})", result.hbar, result.converged, result.grad_norm);
    if !result.converged {
        eprintln!("error: solve did not converge after {} Newton iterations", result.iterations);
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &RunArgs) -> Result<i32> {
    let (cfg, grid, dir) = configured(args)?;
    let momenta = cfg.momentum_grid()?;
    let mode = if args.jobs > 1 {
        SweepMode::Parallel { jobs: args.jobs }
    } else {
        SweepMode::Sequential
    };
    let table = sweep_p(&grid, &cfg.hamiltonian, &cfg.solver, &momenta, mode)?;
    write_file(&dir.join("effective.csv"), |buf| table.write_csv(buf))?;
    let convexity = table.convexity();
    let mut sidecar = json!({
        "k": table.k,
        "grid": {"d": grid.d(), "n_x": grid.n_x(), "n_t": grid.n_t()},
        "solver": cfg.solver,
        "mode": mode,
        "momentum_grid": table.grid,
        "all_converged": table.all_converged(),
        "convexity": convexity,
    });
    if grid.d() == 1 {
        sidecar["rotation"] = serde_json::to_value(rotation_consistency(&table)?)?;
    }
    let q_grid = match &cfg.sweep.q_grid {
        Some(q) => q.clone(),
        None if grid.d() == 1 => default_q_grid(&table),
        None => Vec::new(),
    };
    let mut status = EXIT_OK;
    match legendre_transform(&table, &q_grid) {
        Ok(legendre) => {
            write_file(&dir.join("legendre.csv"), |buf| legendre.write_csv(buf))?;
            sidecar["fenchel_young_min"] = json!(fenchel_young_gap(&table, &legendre));
            sidecar["biconjugate_deviation"] = json!(biconjugate_deviation(&table, &legendre));
        }
        Err(e @ Error::NonConvex { .. }) => {
            eprintln!("error: {e}");
            sidecar["legendre_error"] = json!(e.to_string());
            status = EXIT_INVARIANT;
        }
        Err(e) => return Err(e),
    }
    write_json(&dir.join("effective.json"), &sidecar)?;
    println!("{} momenta, {} converged", table.p.len(), table.converged.iter().filter(|&&c| c).count());
    if !table.all_converged() {
        eprintln!("error: some sweep entries did not converge (flagged in effective.csv)");
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(status)
}

fn cmd_limit(args: &RunArgs) -> Result<i32> {
    let (cfg, grid, dir) = configured(args)?;
    let report = k_sweep(&grid, &cfg.hamiltonian, &cfg.solver, &cfg.limit.k_list)?;
    write_file(&dir.join("ksweep.csv"), |buf| report.write_csv(buf))?;
    write_json(
        &dir.join("ksweep.json"),
        &json!({
            "grid": {"d": grid.d(), "n_x": grid.n_x(), "n_t": grid.n_t()},
            "solver": cfg.solver,
            "report": report,
            "lip_variation": report.lip_variation(),
        }),
    )?;
    for row in &report.rows {
        println!("k = {:>6}: hbar = {:.10}, S/k = {:.3e}", row.k, row.hbar, row.entropy_over_k);
    }
    if let Some(r) = report.hbar_ref {
        println!("reference hbar = {r:.10}");
    }
    if !report.all_converged() {
        eprintln!("error: some k values did not converge");
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let options = CheckOptions {
        seed: args.seed,
        method: args.method.map_or(DiffMethod::Spectral, Into::into),
        inject_sign_error: args.inject_sign_error,
        ..CheckOptions::default()
    };
    let report = run_checks(&options)?;
    let mut stdout = std::io::stdout().lock();
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{tag} {:<26} {:.3e} (tol {:.1e})", c.name, c.value, c.tolerance)?;
    }
    writeln!(stdout, "{} checks in {:.2} s", report.checks.len(), report.seconds)?;
    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        write_json(&dir.join("check.json"), &report)?;
    }
    if !report.passed() {
        for c in report.failures() {
            eprintln!("error: invariant {} failed ({:e} > {:e})", c.name, c.value, c.tolerance);
        }
        return Ok(EXIT_INVARIANT);
    }
    Ok(EXIT_OK)
}

fn cmd_oracle(args: &OracleArgs) -> Result<i32> {
    let ham = match &args.config {
        Some(path) => RunConfig::load(path)?.hamiltonian,
        None => MechanicalHamiltonian::pendulum(1.0),
    };
    if ham.d != 1 || !ham.is_autonomous() || !ham.eta.iter().all(|e| e.is_zero()) {
        return Err(Error::Precondition("the oracle needs d = 1, eta = 0 and a time-independent V".into()));
    }
    let mut v = ham.v.clone();
    for t in &mut v.terms {
        t.cos *= ham.lambda;
        t.sin *= ham.lambda;
    }
    let p_star = critical_momentum(&v)?;
    let rows = args
        .p
        .iter()
        .map(|&p| pendulum_reference(&v, p).map(|h| json!({"P": p, "hbar": h})))
        .collect::<Result<Vec<_>>>()?;
    println!("{}", serde_json::to_string_pretty(&json!({"P_star": p_star, "values": rows}))?);
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Limit(a) => cmd_limit(a),
        Command::Check(a) => cmd_check(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
