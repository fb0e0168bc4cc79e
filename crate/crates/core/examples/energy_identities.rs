//! Exactness of the projected energy and its relation to the GCR and QNL
//! energies on a perturbed chain.
//!
//! `cargo run --release --example energy_identities`

use qcchain::experiments::{defect_mesh, perturbed_config};
use qcchain::lattice::QcConfiguration;
use qcchain::models::{Model, ModelKind};
use qcchain::potential::PairPotential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_atoms = 400;
    for n in [2, 3] {
        let pot = PairPotential::lennard_jones(n as f64 + 0.25)?;
        let mesh = defect_mesh(n_atoms, 12, 0, n)?;
        let qcp = Model::new(ModelKind::Qcp, &mesh, &pot)?;
        let cfg = perturbed_config(&qcp, 0.1, 7);

        let chain = mesh.reconstruct(&cfg);
        let atomistic = Model::atomistic(n_atoms, &pot)?;
        let full = QcConfiguration::from_displacements(chain.stretch(), chain.displacements().to_vec());
        let exact = atomistic.internal_energy(&full)?;

        println!("n = {n}, atomistic energy of the reconstructed chain {exact:.15}");
        for kind in &ModelKind::ALL[1..] {
            let e = Model::new(*kind, &mesh, &pot)?.internal_energy(&cfg)?;
            println!("  {:<12} {:+.3e}", kind.name(), e - exact);
        }
    }
    Ok(())
}
