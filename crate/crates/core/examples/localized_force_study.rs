//! Localized-force study: error of each model against the atomistic
//! reference as the nonlocal region grows.
//!
//! `cargo run --release --example localized_force_study -- 10000`

use qcchain::experiments::{fit_convergence, run_localized_force_study, ExperimentParams, FitMode};
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
        ],
        ..ExperimentParams::default()
    };
    let table = run_localized_force_study(&params)?;
    println!("{:<6} {:>4} {:>24} {:>5}", "model", "m", "W1inf error", "iter");
    for r in &table.rows {
        println!("{:<6} {:>4} {:>24.16e} {:>5}", r.model.name(), r.m, r.error, r.iterations);
    }
    for kind in [ModelKind::Qcp, ModelKind::GcrStandard] {
        let fit = fit_convergence(&table, kind, FitMode::ExponentialInM)?;
        println!("{kind}: error ~ exp({:.3} m)", fit.slope);
    }
    Ok(())
}
