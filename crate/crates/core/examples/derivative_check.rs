//! Analytic gradients and Hessians of every model against central
//! differences at a random configuration.
//!
//! `cargo run --release --example derivative_check`

use qcchain::experiments::{defect_mesh, perturbed_config};
use qcchain::models::{ExternalForce, Model, ModelKind};
use qcchain::potential::PairPotential;
use qcchain::solver::fd_check;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_atoms = 300;
    let pot = PairPotential::lennard_jones(3.25)?;
    let mesh = defect_mesh(n_atoms, 10, 4, pot.neighbor_range())?;
    let force = ExternalForce::bulk(n_atoms);
    println!("{:<12} {:>9} {:>12} {:>12}", "model", "unknowns", "gradient", "hessian");
    for kind in ModelKind::ALL {
        let model = Model::for_kind(kind, &mesh, &pot)?;
        let cfg = perturbed_config(&model, 0.1, 42);
        let fd = fd_check(&model, &cfg, &force)?;
        println!(
            "{:<12} {:>9} {:>12.3e} {:>12.3e}",
            kind.name(),
            model.n_unknowns(),
            fd.gradient_deviation,
            fd.hessian_deviation
        );
    }
    Ok(())
}
