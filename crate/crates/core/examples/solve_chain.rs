//! Equilibrium of a chain under a pair of opposite point forces, solved with
//! the projected method and compared with the full atomistic solution.
//!
//! `cargo run --release --example solve_chain -- 4000 12`

use qcchain::experiments::{defect_mesh, reference_solution, w1inf_error};
use qcchain::models::{ExternalForce, Model, ModelKind};
use qcchain::potential::PairPotential;
use qcchain::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_atoms: usize = args.next().map_or(Ok(4000), |s| s.parse())?;
    let m: usize = args.next().map_or(Ok(12), |s| s.parse())?;
    let pot = PairPotential::lennard_jones(3.25)?;
    let force = ExternalForce::localized_pair(n_atoms);
    let config = SolverConfig::default();

    let (reference, ref_res) = reference_solution(n_atoms, &pot, &force, &config)?;
    println!("atomistic: {} iterations, residual {:.2e}", ref_res.iterations, ref_res.residual());

    let mesh = defect_mesh(n_atoms, m, 6, pot.neighbor_range())?;
    let model = Model::new(ModelKind::Qcp, &mesh, &pot)?;
    let res = solve(&model, &force, model.uniform_config(1.0), &config)?;
    let chain = model.reconstruct(&res.configuration);
    println!(
        "qcp with {} unknowns: {} iterations, residuals {:?}",
        model.n_unknowns(),
        res.iterations,
        res.residual_history
    );
    println!("W1inf error {:.3e}", w1inf_error(&chain, &reference)?);

    let gaps = chain.scaled_gaps();
    let mid = n_atoms / 2;
    for (i, g) in gaps.iter().enumerate().take(mid + 3).skip(mid - 3) {
        println!("gap {:>5}: {:.12}", i + 1, g);
    }
    Ok(())
}
