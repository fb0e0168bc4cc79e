//! TOML configuration for the studies.
//!
//! ```toml
//! n_atoms = 2000
//! cutoff_radius = 3.25
//! models = ["qce", "qnl", "gcr", "qcp"]
//! m_list = [8, 10, 12]
//! dof_list = [16, 32, 64]
//! residual_tolerance = 1e-12
//! seed = 0
//! output_dir = "out"
//! ```
//!
//! Missing keys take the defaults of [`ExperimentParams::default`].

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::experiments::{ExperimentError, ExperimentParams};
use crate::models::ModelKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ExperimentError),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_atoms: Option<usize>,
    cutoff_radius: Option<f64>,
    models: Option<Vec<ModelKind>>,
    m_list: Option<Vec<usize>>,
    dof_list: Option<Vec<usize>>,
    residual_tolerance: Option<f64>,
    seed: Option<u64>,
    output_dir: Option<String>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentParams, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let d = ExperimentParams::default();
    let params = ExperimentParams {
        n_atoms: raw.n_atoms.unwrap_or(d.n_atoms),
        cutoff_radius: raw.cutoff_radius.unwrap_or(d.cutoff_radius),
        models: raw.models.unwrap_or(d.models),
        m_list: raw.m_list.unwrap_or(d.m_list),
        dof_list: raw.dof_list.unwrap_or(d.dof_list),
        residual_tolerance: raw.residual_tolerance.unwrap_or(d.residual_tolerance),
        seed: raw.seed.unwrap_or(d.seed),
        output_dir: raw.output_dir.unwrap_or(d.output_dir),
    };
    params.validate()?;
    Ok(params)
}

pub fn load_config(path: &Path) -> Result<ExperimentParams, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
