//! A user-supplied pair law given as a table: a Morse potential with range
//! three, checked for ghost forces and solved under a bulk load.
//!
//! `cargo run --release --example custom_potential`

use qcchain::experiments::{defect_mesh, reference_solution, w1inf_error};
use qcchain::models::{ghost_force, ExternalForce, Model, ModelKind};
use qcchain::potential::{Derivs, PairPotential, PotentialTable};
use qcchain::solver::{solve, SolverConfig};

/// Morse potential with its minimum `-1` at `z = 1`.
fn morse(z: f64) -> Derivs {
    let a = 3.0;
    let e = (-a * (z - 1.0)).exp();
    Derivs {
        value: e * e - 2.0 * e,
        first: -2.0 * a * (e * e - e),
        second: 2.0 * a * a * (2.0 * e * e - e),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = PotentialTable::sample(0.5, 3.5, 3001, morse)?;
    let pot = PairPotential::tabulated(table, 3.25)?;
    let n_atoms = 2000;
    let mesh = defect_mesh(n_atoms, 10, 0, pot.neighbor_range())?;

    for kind in [ModelKind::Qce, ModelKind::Qnl, ModelKind::GcrStandard, ModelKind::Qcp] {
        let gf = ghost_force(kind, &mesh, 1.0, &pot)?;
        println!("{:<6} max ghost force {:.3e}", kind.name(), gf.max_norm);
    }

    let force = ExternalForce::bulk(n_atoms);
    let config = SolverConfig::default();
    let (reference, _) = reference_solution(n_atoms, &pot, &force, &config)?;
    for local in [8, 32, 128] {
        let mesh = defect_mesh(n_atoms, 10, local, pot.neighbor_range())?;
        let model = Model::new(ModelKind::Qcp, &mesh, &pot)?;
        let res = solve(&model, &force, model.uniform_config(1.0), &config)?;
        let err = w1inf_error(&model.reconstruct(&res.configuration), &reference)?;
        println!("qcp, {:>4} DoF: error {:.3e}", mesh.dof(), err);
    }
    Ok(())
}
