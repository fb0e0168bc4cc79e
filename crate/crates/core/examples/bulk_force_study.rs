//! Bulk-force study: error against degrees of freedom, keeping for each DoF
//! the nonlocal width with the smallest error.
//!
//! `cargo run --release --example bulk_force_study -- 10000`

use qcchain::experiments::{fit_convergence, run_bulk_force_study, ExperimentParams, FitMode};
use qcchain::models::ModelKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_atoms = std::env::args().nth(1).map_or(Ok(2000), |s| s.parse())?;
    let params = ExperimentParams {
        n_atoms,
        models: vec![
            ModelKind::Qce,
            ModelKind::Qnl,
            ModelKind::GcrStandard,
            ModelKind::Qcp,
            ModelKind::Qcpm,
        ],
        ..ExperimentParams::default()
    };
    let table = run_bulk_force_study(&params)?;
    println!("{:<6} {:>5} {:>4} {:>24} {:>5}", "model", "dof", "m", "W1inf error", "iter");
    for r in &table.rows {
        println!(
            "{:<6} {:>5} {:>4} {:>24.16e} {:>5}",
            r.model.name(),
            r.dof,
            r.m,
            r.error,
            r.iterations
        );
    }
    for kind in [ModelKind::Qcp, ModelKind::GcrStandard] {
        let fit = fit_convergence(&table, kind, FitMode::PowerInDof)?;
        println!("{kind}: error ~ DoF^{:.3}", fit.slope);
    }
    Ok(())
}
