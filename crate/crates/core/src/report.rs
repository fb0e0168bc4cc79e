//! CSV and JSON output of study tables and chains.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::experiments::StudyTable;
use crate::lattice::PeriodicChain;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "model,param,dof,m,error,iterations";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_string(table: &StudyTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model.name(),
            r.param,
            r.dof,
            r.m,
            num(r.error),
            r.iterations
        ));
    }
    out
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

pub fn write_report(table: &StudyTable, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    let body = match format {
        ReportFormat::Csv => csv_string(table),
        ReportFormat::Json => json_string(table)?,
    };
    write_file(path, &body)
}

/// `index,position` rows for atoms `1..=N`.
pub fn chain_csv(chain: &PeriodicChain) -> String {
    let mut out = String::from("index,position\n");
    for (k, u) in chain.positions().iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, num(*u)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{StudyMetadata, StudyRow};
    use crate::models::ModelKind;

    fn table(rows: Vec<StudyRow>) -> StudyTable {
        StudyTable {
            metadata: StudyMetadata {
                study: "localized_force".into(),
                n_atoms: 100,
                cutoff_radius: 3.25,
                neighbor_range: 3,
                potential: "lennard-jones".into(),
                seed: 0,
                residual_tolerance: 1e-12,
                models: vec![ModelKind::Qcp],
                m_list: vec![8],
                dof_list: vec![],
                output_dir: "out".into(),
                reference_iterations: 2,
                reference_residual: 0.0,
            },
            rows,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(csv_string(&table(vec![])), "model,param,dof,m,error,iterations\n");
    }

    #[test]
    fn one_row_csv_and_json_round_trip() {
        let t = table(vec![StudyRow {
            model: ModelKind::Qcp,
            param: 8,
            dof: 7,
            m: 8,
            error: 0.1,
            iterations: 2,
            converged: true,
            residual: 1e-15,
            failure: None,
        }]);
        assert_eq!(
            csv_string(&t),
            "model,param,dof,m,error,iterations\nqcp,8,7,8,1.0000000000000001e-1,2\n"
        );
        let back: StudyTable = serde_json::from_str(&json_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
