//! Forces on the unstrained lattice for every coupling method.
//!
//! `cargo run --release --example ghost_forces`

use qcchain::experiments::defect_mesh;
use qcchain::models::{ghost_force, ModelKind};
use qcchain::potential::PairPotential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_atoms = 2000;
    println!("{:<12} {:>2} {:>12} {:>10}", "model", "n", "max |force|", "at atom");
    for n in [2, 3] {
        let pot = PairPotential::lennard_jones(n as f64 + 0.25)?;
        let mesh = defect_mesh(n_atoms, 8, 3, n)?;
        for kind in &ModelKind::ALL[1..] {
            let gf = ghost_force(*kind, &mesh, 1.0, &pot)?;
            let (k, _) = gf
                .force
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            println!("{:<12} {:>2} {:>12.3e} {:>10}", kind.name(), n, gf.max_norm, gf.labels[k]);
        }
    }
    let pot = PairPotential::lennard_jones(2.25)?;
    let expected = 0.5 / n_atoms as f64 * pot.phi(2.0)?.first;
    println!("qce, n = 2: expected eps/2 phi'(2) = {expected:.6e} next to each interface");
    Ok(())
}
