use super::*;
use crate::lattice::PeriodicChain;

fn brute_force_energy(chain: &PeriodicChain, pot: &PairPotential) -> f64 {
    let n = pot.neighbor_range() as i64;
    let eps = chain.epsilon();
    let mut e = 0.0;
    for i in 1..=chain.n_atoms() as i64 {
        for j in i - n..=i + n {
            if j != i {
                let r = chain.scaled_position(i) - chain.scaled_position(j);
                e += 0.5 * eps * pot.phi(r).unwrap().value;
            }
        }
    }
    e
}

fn wiggle(mesh: &NodalMesh, amp: f64) -> QcConfiguration {
    let disp = (0..mesh.n_nodes())
        .map(|k| amp * ((k * k) as f64 * 0.7 + 0.3).sin())
        .collect();
    QcConfiguration::from_displacements(1.0, disp)
}

#[test]
fn atomistic_energy_of_small_uniform_chain() {
    let pot = PairPotential::lennard_jones(2.5).unwrap();
    let model = Model::atomistic(8, &pot).unwrap();
    let rep = model.report(&model.uniform_config(1.0), &ExternalForce::zeros(8)).unwrap();
    let phi = |z: f64| pot.phi(z).unwrap().value;
    assert!((rep.energy - (phi(1.0) + phi(2.0))).abs() < 1e-15);
    assert!(rep.gradient.iter().all(|g| g.abs() < 1e-15));
}

#[test]
fn qcp_matches_reconstructed_atomistic() {
    for n in 1..=3 {
        let pot = PairPotential::lennard_jones(n as f64 + 0.25).unwrap();
        for local in [0, 1, 4] {
            let mesh = NodalMesh::build(120, 60, 2, 4, local, n).unwrap();
            let model = Model::new(ModelKind::Qcp, &mesh, &pot).unwrap();
            let cfg = wiggle(&mesh, 0.08);
            let e = model.internal_energy(&cfg).unwrap();
            let exact = brute_force_energy(&mesh.reconstruct(&cfg), &pot);
            assert!((e - exact).abs() < 1e-12, "n={n} local={local}: {e} vs {exact}");
        }
    }
}

#[test]
fn qce_equals_qcp_for_nearest_neighbours() {
    let pot = PairPotential::lennard_jones(1.5).unwrap();
    let mesh = NodalMesh::build(60, 30, 2, 2, 3, 1).unwrap();
    let cfg = wiggle(&mesh, 0.05);
    let a = Model::new(ModelKind::Qce, &mesh, &pot).unwrap().internal_energy(&cfg).unwrap();
    let b = Model::new(ModelKind::Qcp, &mesh, &pot).unwrap().internal_energy(&cfg).unwrap();
    assert!((a - b).abs() < 1e-13);
}

#[test]
fn qce_ghost_force_at_second_nonlocal_atom() {
    let pot = PairPotential::lennard_jones(2.25).unwrap();
    let mesh = NodalMesh::build(2000, 1000, 2, 3, 0, 2).unwrap();
    let gf = ghost_force(ModelKind::Qce, &mesh, 1.0, &pot).unwrap();
    let (a, b) = mesh.nonlocal_range();
    let expected = 0.5 * mesh.epsilon() * pot.phi(2.0).unwrap().first;
    assert!((gf.at(a + 1).unwrap() - expected).abs() < 1e-15);
    assert!((gf.at(b - 1).unwrap() + expected).abs() < 1e-15);
}

#[test]
fn ghost_free_models_at_uniform_strain() {
    for n in [2, 3] {
        let pot = PairPotential::lennard_jones(n as f64 + 0.25).unwrap();
        let mesh = NodalMesh::build(400, 200, 2, 4, 3, n).unwrap();
        for kind in [ModelKind::Qcp, ModelKind::Qcpm, ModelKind::GcrStandard, ModelKind::GcrShifted] {
            let gf = ghost_force(kind, &mesh, 1.03, &pot).unwrap();
            assert!(gf.max_norm < 1e-13, "{kind} n={n}: {}", gf.max_norm);
        }
    }
}

#[test]
fn qnl_needs_second_neighbours() {
    let pot = PairPotential::lennard_jones(1.5).unwrap();
    let mesh = NodalMesh::build(60, 30, 2, 2, 0, 1).unwrap();
    let err = Model::new(ModelKind::Qnl, &mesh, &pot).unwrap_err();
    assert_eq!(err.to_string(), "QNL undefined below second-neighbor range");
}

#[test]
fn inverted_configuration_is_rejected() {
    let pot = PairPotential::lennard_jones(2.25).unwrap();
    let model = Model::atomistic(10, &pot).unwrap();
    let mut cfg = model.uniform_config(1.0);
    cfg.displacements_mut()[3] = 1.5;
    let err = model.internal_energy(&cfg).unwrap_err();
    assert!(err.to_string().contains("inverted bond"), "{err}");
}

#[test]
fn model_names_round_trip() {
    for kind in ModelKind::ALL {
        assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
    }
    assert!("qcx".parse::<ModelKind>().is_err());
}

#[test]
fn bulk_force_sums_to_zero() {
    let f = ExternalForce::bulk(1000);
    assert!(f.sum().abs() < 1e-12);
}
