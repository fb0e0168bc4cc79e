//! Convergence studies against a full atomistic reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{MeshError, NodalMesh, PeriodicChain, QcConfiguration};
use crate::models::{ExternalForce, Model, ModelError, ModelKind};
use crate::potential::{PairPotential, PotentialError};
use crate::solver::{solve, SolveResult, SolverConfig, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid value for '{key}': {message}")]
    InvalidParam { key: &'static str, message: String },
    #[error("chains have {0} and {1} atoms")]
    LengthMismatch(usize, usize),
    #[error("fit for model '{model}' needs at least 3 rows with positive error, got {rows}")]
    TooFewRows { model: String, rows: usize },
    #[error("reference atomistic solve failed: {0}")]
    Reference(SolverError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidParam {
        key,
        message: message.into(),
    }
}

/// Inputs shared by both studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub n_atoms: usize,
    pub cutoff_radius: f64,
    pub models: Vec<ModelKind>,
    pub m_list: Vec<usize>,
    pub dof_list: Vec<usize>,
    pub residual_tolerance: f64,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            n_atoms: 2000,
            cutoff_radius: 3.25,
            models: vec![ModelKind::Qce, ModelKind::Qnl, ModelKind::GcrStandard, ModelKind::Qcp],
            m_list: (8..=20).step_by(2).collect(),
            dof_list: vec![16, 32, 64, 128, 256],
            residual_tolerance: 1e-12,
            seed: 0,
            output_dir: "out".into(),
        }
    }
}

impl ExperimentParams {
    pub fn potential(&self) -> Result<PairPotential, ExperimentError> {
        Ok(PairPotential::lennard_jones(self.cutoff_radius)?)
    }

    pub fn neighbor_range(&self) -> Result<usize, ExperimentError> {
        Ok(self.potential()?.neighbor_range())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            residual_tolerance: self.residual_tolerance,
            ..SolverConfig::default()
        }
    }

    /// Smallest admissible nonlocal width `2n + 2`.
    pub fn min_m(&self) -> Result<usize, ExperimentError> {
        Ok(2 * self.neighbor_range()? + 2)
    }

    /// Checks every key.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.validate_common()?;
        self.validate_m_list()?;
        self.validate_dof_list()
    }

    /// Checks the keys used by every command.
    pub fn validate_common(&self) -> Result<(), ExperimentError> {
        let n = self.neighbor_range()?;
        if !self.n_atoms.is_multiple_of(2) || self.n_atoms < 8 * (n + 1) {
            return Err(invalid(
                "n_atoms",
                format!("must be even and at least {}, got {}", 8 * (n + 1), self.n_atoms),
            ));
        }
        if !(self.residual_tolerance > 0.0) {
            return Err(invalid("residual_tolerance", "must be positive"));
        }
        if self.models.is_empty() {
            return Err(invalid("models", "at least one model is required"));
        }
        for &kind in &self.models {
            if kind != ModelKind::Atomistic {
                kind.check_geometry(n, 2 * n + 2)?;
            }
        }
        Ok(())
    }

    pub fn validate_m_list(&self) -> Result<(), ExperimentError> {
        let min_m = self.min_m()?;
        for &m in &self.m_list {
            if m % 2 != 0 {
                return Err(invalid("m_list", format!("m must be even, got {m}")));
            }
            if m < min_m || m >= self.n_atoms / 2 {
                return Err(invalid(
                    "m_list",
                    format!("m must lie in [{min_m}, {}), got {m}", self.n_atoms / 2),
                ));
            }
        }
        Ok(())
    }

    pub fn validate_dof_list(&self) -> Result<(), ExperimentError> {
        let min_m = self.min_m()?;
        for &d in &self.dof_list {
            if d >= self.n_atoms || d < min_m {
                return Err(invalid(
                    "dof_list",
                    format!("DoF must lie in [{min_m}, {}], got {d}", self.n_atoms - 1),
                ));
            }
            let n = self.neighbor_range()?;
            let feasible = bulk_m_candidates(d, n)
                .into_iter()
                .any(|m| defect_mesh(self.n_atoms, m, d + 1 - m, n).is_ok());
            if !feasible {
                return Err(invalid(
                    "dof_list",
                    format!("no admissible mesh with {d} degrees of freedom for {} atoms", self.n_atoms),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub model: ModelKind,
    /// Sweep parameter: `m` for the localized study, target DoF for the bulk study.
    pub param: usize,
    pub dof: usize,
    /// Width of the nonlocal region.
    pub m: usize,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub study: String,
    pub n_atoms: usize,
    pub cutoff_radius: f64,
    pub neighbor_range: usize,
    pub potential: String,
    pub seed: u64,
    pub residual_tolerance: f64,
    pub models: Vec<ModelKind>,
    pub m_list: Vec<usize>,
    pub dof_list: Vec<usize>,
    pub output_dir: String,
    pub reference_iterations: usize,
    pub reference_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub metadata: StudyMetadata,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn rows_for(&self, model: ModelKind) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.model == model)
    }

    /// Errors of `model` in row order.
    pub fn errors(&self, model: ModelKind) -> Vec<f64> {
        self.rows_for(model).map(|r| r.error).collect()
    }
}

/// Discrete `W^{1,inf}` distance: `max_i |(u_{i+1} - u_i) - (v_{i+1} - v_i)| / eps`.
pub fn w1inf_error(u_num: &PeriodicChain, u_ref: &PeriodicChain) -> Result<f64, ExperimentError> {
    if u_num.n_atoms() != u_ref.n_atoms() {
        return Err(ExperimentError::LengthMismatch(u_num.n_atoms(), u_ref.n_atoms()));
    }
    let n = u_num.n_atoms();
    let ds = u_num.stretch() - u_ref.stretch();
    let d: Vec<f64> = u_num
        .displacements()
        .iter()
        .zip(u_ref.displacements())
        .map(|(a, b)| a - b)
        .collect();
    Ok((0..n).fold(0.0, |m, k| m.max((ds + (d[(k + 1) % n] - d[k])).abs())))
}

/// Uniform lattice with every unknown displaced by a uniform draw from
/// `[-amplitude, amplitude]` (lattice units).
pub fn perturbed_config(model: &Model, amplitude: f64, seed: u64) -> QcConfiguration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = model.uniform_config(1.0);
    for x in cfg.displacements_mut() {
        *x = rng.gen_range(-amplitude..=amplitude);
    }
    cfg
}

/// Full atomistic equilibrium under `force`, from the uniform lattice.
pub fn reference_solution(
    n_atoms: usize,
    potential: &PairPotential,
    force: &ExternalForce,
    config: &SolverConfig,
) -> Result<(PeriodicChain, SolveResult), ExperimentError> {
    let model = Model::atomistic(n_atoms, potential)?;
    let res = solve(&model, force, model.uniform_config(1.0), config).map_err(ExperimentError::Reference)?;
    if !res.converged {
        return Err(ExperimentError::Reference(SolverError::InvalidConfig(format!(
            "no convergence after {} iterations (residual {:e})",
            res.iterations,
            res.residual()
        ))));
    }
    Ok((model.reconstruct(&res.configuration), res))
}

/// Mesh of the localized study: nonlocal block `[N/2 - m/2 + 1, N/2 + m/2]`
/// plus `local_nodes` equispaced local nodes.
pub fn defect_mesh(n_atoms: usize, m: usize, local_nodes: usize, n: usize) -> Result<NodalMesh, MeshError> {
    NodalMesh::build(
        n_atoms,
        n_atoms as i64 / 2,
        2,
        m as i64 / 2 - 1,
        local_nodes,
        n,
    )
}

struct Job {
    model: ModelKind,
    param: usize,
    m: usize,
    local_nodes: usize,
}

fn run_job(
    job: &Job,
    params: &ExperimentParams,
    potential: &PairPotential,
    force: &ExternalForce,
    reference: &PeriodicChain,
) -> StudyRow {
    let n = potential.neighbor_range();
    let mut row = StudyRow {
        model: job.model,
        param: job.param,
        dof: 0,
        m: job.m,
        error: f64::NAN,
        iterations: 0,
        converged: false,
        residual: f64::NAN,
        failure: None,
    };
    let outcome = (|| -> Result<(), String> {
        let mesh = defect_mesh(params.n_atoms, job.m, job.local_nodes, n).map_err(|e| e.to_string())?;
        row.dof = mesh.dof();
        let model = Model::for_kind(job.model, &mesh, potential).map_err(|e| e.to_string())?;
        row.dof = model.n_unknowns() - 1;
        let res = solve(&model, force, model.uniform_config(1.0), &params.solver_config())
            .map_err(|e| e.to_string())?;
        row.iterations = res.iterations;
        row.converged = res.converged;
        row.residual = res.residual();
        row.error = w1inf_error(&model.reconstruct(&res.configuration), reference).map_err(|e| e.to_string())?;
        if !res.converged {
            return Err(format!("no convergence after {} iterations", res.iterations));
        }
        Ok(())
    })();
    row.failure = outcome.err();
    row
}

fn metadata(
    study: &str,
    params: &ExperimentParams,
    potential: &PairPotential,
    reference: &SolveResult,
) -> StudyMetadata {
    StudyMetadata {
        study: study.into(),
        n_atoms: params.n_atoms,
        cutoff_radius: params.cutoff_radius,
        neighbor_range: potential.neighbor_range(),
        potential: potential.name().into(),
        seed: params.seed,
        residual_tolerance: params.residual_tolerance,
        models: params.models.clone(),
        m_list: params.m_list.clone(),
        dof_list: params.dof_list.clone(),
        output_dir: params.output_dir.clone(),
        reference_iterations: reference.iterations,
        reference_residual: reference.residual(),
    }
}

/// Forces `-1, +1` on atoms `N/2, N/2 + 1`; one row per (model, m) on the
/// single-local-element mesh.
pub fn run_localized_force_study(params: &ExperimentParams) -> Result<StudyTable, ExperimentError> {
    params.validate_common()?;
    params.validate_m_list()?;
    let potential = params.potential()?;
    let force = ExternalForce::localized_pair(params.n_atoms);
    let (reference, ref_res) =
        reference_solution(params.n_atoms, &potential, &force, &params.solver_config())?;
    let jobs: Vec<Job> = params
        .models
        .iter()
        .flat_map(|&model| {
            params.m_list.iter().map(move |&m| Job {
                model,
                param: m,
                m,
                local_nodes: 0,
            })
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|j| run_job(j, params, &potential, &force, &reference))
        .collect();
    Ok(StudyTable {
        metadata: metadata("localized_force", params, &potential, &ref_res),
        rows,
    })
}

/// Even `m` tried for a target DoF: from `2n + 2` while at least one local
/// node remains.
pub fn bulk_m_candidates(dof: usize, n: usize) -> Vec<usize> {
    let nodes = dof + 1;
    (2 * n + 2..nodes).step_by(2).collect()
}

/// Irregular plus smooth force; for every (model, DoF) the nonlocal width
/// giving the smallest error is kept.
pub fn run_bulk_force_study(params: &ExperimentParams) -> Result<StudyTable, ExperimentError> {
    params.validate_common()?;
    params.validate_dof_list()?;
    let potential = params.potential()?;
    let n = potential.neighbor_range();
    let force = ExternalForce::bulk(params.n_atoms);
    let (reference, ref_res) =
        reference_solution(params.n_atoms, &potential, &force, &params.solver_config())?;
    let mut jobs = Vec::new();
    for &model in &params.models {
        for &dof in &params.dof_list {
            for m in bulk_m_candidates(dof, n) {
                jobs.push(Job {
                    model,
                    param: dof,
                    m,
                    local_nodes: dof + 1 - m,
                });
            }
        }
    }
    let all: Vec<StudyRow> = jobs
        .par_iter()
        .map(|j| run_job(j, params, &potential, &force, &reference))
        .collect();
    let mut rows = Vec::new();
    for &model in &params.models {
        for &dof in &params.dof_list {
            let candidates = all.iter().filter(|r| r.model == model && r.param == dof);
            let best = candidates
                .clone()
                .filter(|r| r.failure.is_none())
                .min_by(|a, b| a.error.total_cmp(&b.error))
                .or_else(|| candidates.clone().next());
            if let Some(best) = best {
                rows.push(best.clone());
            }
        }
    }
    Ok(StudyTable {
        metadata: metadata("bulk_force", params, &potential, &ref_res),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMode {
    /// `log(error)` against `m`.
    ExponentialInM,
    /// `log(error)` against `log(DoF)`.
    PowerInDof,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    /// Slope of the least-squares line (rate per unit `m`, or DoF exponent).
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log(error)` about the line.
    pub residual: f64,
    /// `max - min` of `log(error)` over the fitted rows.
    pub spread: f64,
    pub rows: usize,
}

/// Least-squares line through `(x, log y)`.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Option<ConvergenceFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| y.is_finite() && *y > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    Some(ConvergenceFit {
        slope,
        intercept,
        residual: (ss / k).sqrt(),
        spread: hi - lo,
        rows: pts.len(),
    })
}

/// Fits the rows of `model` in `table`.
pub fn fit_convergence(table: &StudyTable, model: ModelKind, mode: FitMode) -> Result<ConvergenceFit, ExperimentError> {
    let points: Vec<(f64, f64)> = table
        .rows_for(model)
        .map(|r| match mode {
            FitMode::ExponentialInM => (r.m as f64, r.error),
            FitMode::PowerInDof => ((r.dof as f64).ln(), r.error),
        })
        .collect();
    fit_log_linear(&points).ok_or_else(|| ExperimentError::TooFewRows {
        model: model.name().into(),
        rows: points.iter().filter(|p| p.1 > 0.0).count(),
    })
}
