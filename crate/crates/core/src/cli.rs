//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_config, ConfigError};
use crate::experiments::{
    defect_mesh, perturbed_config, run_bulk_force_study, run_localized_force_study, ExperimentError,
    ExperimentParams, StudyTable,
};
use crate::models::{ghost_force, ExternalForce, Model, ModelError, ModelKind};
use crate::report::{chain_csv, csv_string, json_string, write_file, ReportError};
use crate::solver::{fd_check, solve, SolverError};

#[derive(Debug, Parser)]
#[command(name = "qc1d", version, about = "Quasicontinuum coupling methods for periodic atomic chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forces on the unstrained lattice for every model and n = 2, 3.
    GhostForce(GhostArgs),
    /// Localized-force study (error against nonlocal width m).
    Test1(StudyArgs),
    /// Bulk-force study (error against degrees of freedom).
    Test2(StudyArgs),
    /// Solve one configuration and write the chain.
    Solve(SolveArgs),
    /// Compare analytic derivatives with finite differences.
    FdCheck(FdArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_atoms: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GhostArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Width of the nonlocal region.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub local_nodes: usize,
    /// Uniform strain.
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub common: Overrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ForceKind {
    None,
    Localized,
    Bulk,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long, default_value = "qcp")]
    pub model: String,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub local_nodes: usize,
    #[arg(long, value_enum, default_value_t = ForceKind::Localized)]
    pub force: ForceKind,
}

#[derive(Debug, Args)]
pub struct FdArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Model to check; all models when omitted.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub local_nodes: usize,
    /// Perturbation amplitude in lattice units.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvertedBond { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Reference(_) => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) => CliError::Validation(e.to_string()),
            SolverError::Model(m) => m.into(),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn resolve(o: &Overrides) -> Result<ExperimentParams, CliError> {
    let mut p = match &o.config {
        Some(path) => load_config(path)?,
        None => ExperimentParams::default(),
    };
    if let Some(v) = o.n_atoms {
        p.n_atoms = v;
    }
    if let Some(v) = o.cutoff {
        p.cutoff_radius = v;
    }
    if let Some(v) = &o.models {
        p.models = v
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, ModelError>>()
            .map_err(|e| CliError::Validation(format!("--models: {e}")))?;
    }
    if let Some(v) = o.seed {
        p.seed = v;
    }
    if let Some(v) = o.tolerance {
        p.residual_tolerance = v;
    }
    if let Some(v) = &o.output_dir {
        p.output_dir = v.display().to_string();
    }
    p.validate_common()?;
    Ok(p)
}

fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.parse()
        .map_err(|e: ModelError| CliError::Validation(format!("--model: {e}")))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let name = match &cli.command {
        Command::GhostForce(_) => "ghost-force",
        Command::Test1(_) => "test1",
        Command::Test2(_) => "test2",
        Command::Solve(_) => "solve",
        Command::FdCheck(_) => "fd-check",
    };
    let result = match cli.command {
        Command::GhostForce(a) => run_ghost(&a, out),
        Command::Test1(a) => run_study(&a, "test1", out),
        Command::Test2(a) => run_study(&a, "test2", out),
        Command::Solve(a) => run_solve(&a, out),
        Command::FdCheck(a) => run_fd(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "qc1d {name}: {e}");
            e.code()
        }
    }
}

fn run_ghost(a: &GhostArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut params = resolve(&a.common)?;
    if a.common.models.is_none() {
        params.models = ModelKind::ALL[1..].to_vec();
    }
    writeln!(
        out,
        "# N = {}, m = {}, local nodes = {}, z = {}",
        params.n_atoms, a.m, a.local_nodes, a.z
    )?;
    writeln!(out, "{:<12} {:>2} {:>24}", "model", "n", "max |force|")?;
    for &kind in &params.models {
        for n in [2usize, 3] {
            let pot = crate::potential::PairPotential::lennard_jones(n as f64 + 0.25)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let mesh = defect_mesh(params.n_atoms, a.m, a.local_nodes, n)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            match ghost_force(kind, &mesh, a.z, &pot) {
                Ok(g) => writeln!(out, "{:<12} {:>2} {:>24.16e}", kind.name(), n, g.max_norm)?,
                Err(e) => writeln!(out, "{:<12} {:>2} {:>24}", kind.name(), n, format!("n/a ({e})"))?,
            }
        }
    }
    Ok(())
}

fn write_study(table: &StudyTable, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), CliError> {
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_file(&csv, &csv_string(table))?;
    write_file(&json, &json_string(table)?)?;
    Ok((csv, json))
}

fn run_study(a: &StudyArgs, stem: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let params = resolve(&a.common)?;
    let table = if stem == "test1" {
        run_localized_force_study(&params)?
    } else {
        run_bulk_force_study(&params)?
    };
    let (csv, json) = write_study(&table, Path::new(&params.output_dir), stem)?;
    for r in &table.rows {
        writeln!(
            out,
            "{:<12} {:>6} {:>4} {:>24.16e} {:>3}{}",
            r.model.name(),
            r.param,
            r.m,
            r.error,
            r.iterations,
            r.failure.as_deref().map(|f| format!("  ({f})")).unwrap_or_default()
        )?;
    }
    writeln!(out, "wrote {} and {}", csv.display(), json.display())?;
    let failed = table.rows.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        return Err(CliError::Solver(format!("{failed} rows did not converge")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveMetadata<'a> {
    model: ModelKind,
    m: usize,
    local_nodes: usize,
    force: String,
    params: &'a ExperimentParams,
    iterations: usize,
    converged: bool,
    residual_history: &'a [f64],
    energy: f64,
}

fn run_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = resolve(&a.common)?;
    let kind = parse_model(&a.model)?;
    let pot = params.potential()?;
    let mesh = defect_mesh(params.n_atoms, a.m, a.local_nodes, pot.neighbor_range())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let model = Model::for_kind(kind, &mesh, &pot)?;
    let force = match a.force {
        ForceKind::None => ExternalForce::zeros(params.n_atoms),
        ForceKind::Localized => ExternalForce::localized_pair(params.n_atoms),
        ForceKind::Bulk => ExternalForce::bulk(params.n_atoms),
    };
    let res = solve(&model, &force, model.uniform_config(1.0), &params.solver_config())?;
    let stem = format!("solve_{}_m{}", kind.name(), a.m);
    let dir = Path::new(&params.output_dir);
    let chain_path = dir.join(format!("{stem}.csv"));
    write_file(&chain_path, &chain_csv(&model.reconstruct(&res.configuration)))?;
    let meta = SolveMetadata {
        model: kind,
        m: a.m,
        local_nodes: a.local_nodes,
        force: format!("{:?}", a.force).to_lowercase(),
        params: &params,
        iterations: res.iterations,
        converged: res.converged,
        residual_history: &res.residual_history,
        energy: res.energy,
    };
    write_file(&dir.join(format!("{stem}.json")), &json_string(&meta)?)?;
    writeln!(
        out,
        "{}: {} iterations, residual {:.3e}, energy {:.16e}; wrote {}",
        kind.name(),
        res.iterations,
        res.residual(),
        res.energy,
        chain_path.display()
    )?;
    if !res.converged {
        return Err(CliError::Solver(format!(
            "no convergence after {} iterations (residual {:.3e})",
            res.iterations,
            res.residual()
        )));
    }
    Ok(())
}

fn run_fd(a: &FdArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = resolve(&a.common)?;
    let kinds = match &a.model {
        Some(s) => vec![parse_model(s)?],
        None => ModelKind::ALL.to_vec(),
    };
    let pot = params.potential()?;
    let mesh = defect_mesh(params.n_atoms, a.m, a.local_nodes, pot.neighbor_range())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    writeln!(out, "{:<12} {:>14} {:>14}", "model", "gradient", "hessian")?;
    for kind in kinds {
        let model = Model::for_kind(kind, &mesh, &pot)?;
        let cfg = perturbed_config(&model, a.amplitude, params.seed);
        let chk = fd_check(&model, &cfg, &ExternalForce::zeros(params.n_atoms))?;
        writeln!(
            out,
            "{:<12} {:>14.3e} {:>14.3e}",
            kind.name(),
            chk.gradient_deviation,
            chk.hessian_deviation
        )?;
    }
    Ok(())
}
