//! Gauge-fixed Newton solver and derivative checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::QcConfiguration;
use crate::models::{ExternalForce, Model, ModelError, NodalLoad};
use crate::sparse::{BandMatrix, LinearSolveError, SymSparse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("indefinite/singular Newton system at iteration {iteration}: {source}")]
    Singular {
        iteration: usize,
        source: LinearSolveError,
    },
    #[error("line search exhausted {halvings} halvings at iteration {iteration}: {reason}")]
    LineSearch {
        iteration: usize,
        halvings: usize,
        reason: String,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Max-norm of the gauge-reduced gradient at convergence.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    /// Step reduction factor of the backtracking line search.
    pub damping: f64,
    pub max_halvings: usize,
    /// Index of the unknown whose position is held fixed.
    pub gauge_node: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-12,
            max_iterations: 50,
            damping: 0.5,
            max_halvings: 30,
            gauge_node: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.residual_tolerance > 0.0) {
            return Err(SolverError::InvalidConfig("residual_tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::InvalidConfig("damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub configuration: QcConfiguration,
    pub energy: f64,
    /// Newton steps taken.
    pub iterations: usize,
    /// Reduced-gradient max-norm before each step and after the last one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl SolveResult {
    pub fn residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

fn reduced_norm(g: &[f64], gauge: usize) -> f64 {
    g.iter()
        .enumerate()
        .filter(|(k, _)| *k != gauge)
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Order of the unknowns around the ring starting next to the gauge:
/// `g+1, g-1, g+2, g-2, ...`. Neighbours on the ring stay close in this
/// order, so the reduced Hessian of a periodic chain is banded.
fn interleaved_order(dim: usize, gauge: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(dim - 1);
    let mut step = 1;
    while order.len() < dim - 1 {
        order.push((gauge + step) % dim);
        if order.len() < dim - 1 {
            order.push((gauge + dim - step) % dim);
        }
        step += 1;
    }
    order
}

fn newton_direction(
    h: &SymSparse,
    g: &[f64],
    gauge: usize,
    order: &[usize],
    pos: &[usize],
) -> Result<Vec<f64>, LinearSolveError> {
    let n = order.len();
    let mut band = 0;
    for &i in order {
        for (j, _) in h.row(i) {
            if j != gauge {
                band = band.max(pos[i].abs_diff(pos[j]));
            }
        }
    }
    let mut a = BandMatrix::zeros(n, band, band);
    for (r, &i) in order.iter().enumerate() {
        for (j, v) in h.row(i) {
            if j != gauge {
                a.add(r, pos[j], v);
            }
        }
    }
    let rhs: Vec<f64> = order.iter().map(|&i| -g[i]).collect();
    let x = a.solve(&rhs)?;
    let mut delta = vec![0.0; g.len()];
    for (r, &i) in order.iter().enumerate() {
        delta[i] = x[r];
    }
    Ok(delta)
}

/// Minimizes the total energy of `model` starting from `initial`.
///
/// Newton steps on the gauge-reduced system, reversed when they ascend and
/// halved until the energy does not increase.
pub fn solve(
    model: &Model,
    force: &ExternalForce,
    initial: QcConfiguration,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let load = model.nodal_load(force)?;
    solve_with_load(model, &load, initial, config)
}

/// [`solve`] with a precomputed nodal load.
pub fn solve_with_load(
    model: &Model,
    load: &NodalLoad,
    initial: QcConfiguration,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let dim = model.n_unknowns();
    let gauge = config.gauge_node;
    if gauge >= dim {
        return Err(SolverError::InvalidConfig(format!(
            "gauge node {gauge} out of range for {dim} unknowns"
        )));
    }
    let order = interleaved_order(dim, gauge);
    let mut pos = vec![usize::MAX; dim];
    for (r, &i) in order.iter().enumerate() {
        pos[i] = r;
    }

    let mut cfg = initial;
    let mut report = model.report_with_load(&cfg, load)?;
    let mut residual = reduced_norm(&report.gradient, gauge);
    let mut history = vec![residual];
    let mut iterations = 0;
    while residual > config.residual_tolerance && iterations < config.max_iterations {
        let mut delta = newton_direction(&report.hessian, &report.gradient, gauge, &order, &pos)
            .map_err(|source| SolverError::Singular {
                iteration: iterations,
                source,
            })?;
        // An indefinite Hessian can yield an ascent direction; its reverse descends.
        let slope: f64 = delta.iter().zip(&report.gradient).map(|(d, g)| d * g).sum();
        if slope > 0.0 {
            delta.iter_mut().for_each(|d| *d = -*d);
        }
        let slack = 1e-14 * (1.0 + report.energy.abs());
        // Below this predicted decrease the energy is round-off noise and the
        // residual serves as merit function instead.
        let energy_resolves = slope.abs() > 100.0 * slack;
        let mut t = 1.0;
        let mut accepted = None;
        let mut reason = String::new();
        for _ in 0..=config.max_halvings {
            let mut trial = cfg.clone();
            trial
                .displacements_mut()
                .iter_mut()
                .zip(&delta)
                .for_each(|(x, d)| *x += t * d);
            match model.gradient(&trial, load) {
                Ok((e, g)) => {
                    let decreased = if energy_resolves {
                        e <= report.energy + slack
                    } else {
                        e <= report.energy + slack || reduced_norm(&g, gauge) < residual
                    };
                    if decreased {
                        accepted = Some(trial);
                        break;
                    }
                    reason = format!("energy rose from {} to {e}", report.energy);
                }
                Err(ModelError::InvertedBond { left, right }) => {
                    reason = format!("inverted bond between atoms {left} and {right}");
                }
                Err(e) => return Err(e.into()),
            }
            t *= config.damping;
        }
        let Some(next) = accepted else {
            return Err(SolverError::LineSearch {
                iteration: iterations,
                halvings: config.max_halvings,
                reason,
            });
        };
        cfg = next;
        report = model.report_with_load(&cfg, load)?;
        residual = reduced_norm(&report.gradient, gauge);
        history.push(residual);
        iterations += 1;
    }
    Ok(SolveResult {
        configuration: cfg,
        energy: report.energy,
        iterations,
        residual_history: history,
        converged: residual <= config.residual_tolerance,
    })
}

/// Largest relative deviations of analytic derivatives from central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub gradient_deviation: f64,
    pub hessian_deviation: f64,
}

/// Compares the analytic gradient and Hessian of `model` with central
/// differences of step `1e-6` (lattice units, i.e. `1e-6 eps` in `u`).
///
/// Gradient deviations are scaled by `max(|g|_inf, eps)`, Hessian deviations by
/// `|H|_max`.
pub fn fd_check(model: &Model, cfg: &QcConfiguration, force: &ExternalForce) -> Result<FdCheck, ModelError> {
    const STEP: f64 = 1e-6;
    let load = model.nodal_load(force)?;
    let report = model.report_with_load(cfg, &load)?;
    let dim = model.n_unknowns();
    let g_scale = report
        .gradient
        .iter()
        .fold(model.epsilon(), |m, v| m.max(v.abs()));
    let h_scale = (0..dim)
        .flat_map(|i| report.hessian.row(i).map(|(_, v)| v.abs()))
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut g_dev: f64 = 0.0;
    let mut h_dev: f64 = 0.0;
    for k in 0..dim {
        let de = model.energy_difference(cfg, &load, k, STEP)?;
        g_dev = g_dev.max((de / (2.0 * STEP) - report.gradient[k]).abs() / g_scale);

        let shifted = |sign: f64| -> Result<Vec<f64>, ModelError> {
            let mut c = cfg.clone();
            c.displacements_mut()[k] += sign * STEP;
            Ok(model.gradient(&c, &load)?.1)
        };
        let (gp, gm) = (shifted(1.0)?, shifted(-1.0)?);
        for i in 0..dim {
            let fd = (gp[i] - gm[i]) / (2.0 * STEP);
            h_dev = h_dev.max((fd - report.hessian.get(i, k)).abs() / h_scale);
        }
    }
    Ok(FdCheck {
        gradient_deviation: g_dev,
        hessian_deviation: h_dev,
    })
}
