use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use qcchain::experiments::{defect_mesh, perturbed_config, w1inf_error};
use qcchain::lattice::{NodalMesh, PeriodicChain, QcConfiguration};
use qcchain::models::{ExternalForce, Model, ModelKind};
use qcchain::potential::PairPotential;
use qcchain::solver::{fd_check, solve, SolverConfig};

#[derive(Debug, Clone)]
struct Setup {
    n_atoms: usize,
    n: usize,
    m: usize,
    local: usize,
    seed: u64,
}

impl Setup {
    fn pot(&self) -> PairPotential {
        PairPotential::lennard_jones(self.n as f64 + 0.25).unwrap()
    }

    fn mesh(&self) -> NodalMesh {
        defect_mesh(self.n_atoms, self.m, self.local, self.n).unwrap()
    }

    fn config(&self, model: &Model) -> QcConfiguration {
        perturbed_config(model, 0.1, self.seed)
    }
}

fn setups(n_range: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Setup> {
    (60usize..=120, n_range, 0usize..4, 0usize..6, any::<u64>()).prop_map(|(half, n, extra, local, seed)| Setup {
        n_atoms: 2 * half,
        n,
        m: 2 * n + 2 + 2 * extra,
        local,
        seed,
    })
}

fn atomistic_config(chain: &PeriodicChain) -> QcConfiguration {
    QcConfiguration::from_displacements(chain.stretch(), chain.displacements().to_vec())
}

fn phi(pot: &PairPotential, z: f64) -> f64 {
    pot.phi(z).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restrict_inverts_reconstruct(s in setups(1..=3), stretch in 0.95f64..1.05) {
        let mesh = s.mesh();
        let model = Model::new(ModelKind::Qcp, &mesh, &s.pot()).unwrap();
        let mut cfg = s.config(&model);
        cfg = QcConfiguration::from_displacements(stretch, cfg.displacements().to_vec());
        let chain = mesh.reconstruct(&cfg);
        prop_assert_eq!(mesh.restrict(&chain).unwrap(), cfg.clone());
        for label in -5..=(s.n_atoms as i64 + 5) {
            let rep = mesh.representation(label);
            let via_rep: f64 = rep
                .entries()
                .iter()
                .map(|&(k, w)| w * (stretch * mesh.node_label(k as i64) as f64 + cfg.displacements()[k]))
                .sum::<f64>()
                + rep.wrap * stretch * s.n_atoms as f64;
            prop_assert!((via_rep - chain.scaled_position(label)).abs() < 1e-12);
        }
    }

    #[test]
    fn gaps_are_constant_inside_elements(s in setups(1..=3)) {
        let mesh = s.mesh();
        let model = Model::new(ModelKind::Qcp, &mesh, &s.pot()).unwrap();
        let chain = mesh.reconstruct(&s.config(&model));
        let gaps = chain.scaled_gaps();
        for e in mesh.elements() {
            let first = gaps[(e.left - 1).rem_euclid(s.n_atoms as i64) as usize];
            for label in e.left..e.right {
                let g = gaps[(label - 1).rem_euclid(s.n_atoms as i64) as usize];
                prop_assert!((g - first).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qcp_gradient_is_projected_atomistic_gradient(s in setups(1..=3)) {
        let mesh = s.mesh();
        let pot = s.pot();
        let qcp = Model::new(ModelKind::Qcp, &mesh, &pot).unwrap();
        let atom = Model::atomistic(s.n_atoms, &pot).unwrap();
        let cfg = s.config(&qcp);
        let none = ExternalForce::zeros(s.n_atoms);
        let (_, g) = qcp.gradient(&cfg, &qcp.nodal_load(&none).unwrap()).unwrap();
        let (_, ga) = atom
            .gradient(&atomistic_config(&mesh.reconstruct(&cfg)), &atom.nodal_load(&none).unwrap())
            .unwrap();
        let mut projected = vec![0.0; g.len()];
        for (i, gi) in ga.iter().enumerate() {
            for &(k, w) in mesh.representation(i as i64 + 1).entries() {
                projected[k] += w * gi;
            }
        }
        for (a, b) in g.iter().zip(&projected) {
            prop_assert!((a - b).abs() < 1e-14, "{} vs {}", a, b);
        }
    }

    #[test]
    fn energies_and_gradients_ignore_rigid_shifts(s in setups(2..=3), shift in -0.5f64..0.5) {
        let mesh = s.mesh();
        let pot = s.pot();
        let force = ExternalForce::bulk(s.n_atoms);
        for kind in ModelKind::ALL {
            let model = Model::for_kind(kind, &mesh, &pot).unwrap();
            let cfg = s.config(&model);
            let mut moved = cfg.clone();
            moved.displacements_mut().iter_mut().for_each(|x| *x += shift);
            let load = model.nodal_load(&force).unwrap();
            let (e0, g0) = model.gradient(&cfg, &load).unwrap();
            let (e1, g1) = model.gradient(&moved, &load).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-12, "{kind}: {e0} vs {e1}");
            for (a, b) in g0.iter().zip(&g1) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qcpm_swaps_crossing_bonds_for_cauchy_born_shares(s in setups(2..=3)) {
        let mesh = s.mesh();
        let pot = s.pot();
        let model = Model::new(ModelKind::Qcpm, &mesh, &pot).unwrap();
        let cfg = s.config(&model);
        let chain = mesh.reconstruct(&cfg);
        let x = |l: i64| chain.scaled_position(l);
        let n_atoms = s.n_atoms as i64;
        let interior: Vec<i64> = mesh.interior_local_nodes().map(|k| mesh.node_label(k as i64)).collect();
        let crosses = |i: i64, j: i64| interior.iter().any(|&p| [p, p + n_atoms].iter().any(|&q| i < q && q < j));
        let mut e = 0.0;
        for i in 1..=n_atoms {
            for k in 1..=s.n as i64 {
                if !crosses(i, i + k) {
                    e += phi(&pot, x(i + k) - x(i));
                }
            }
        }
        for &k in &mesh.interior_local_nodes().collect::<Vec<_>>() {
            let (prev, p, next) = (
                mesh.node_label(k as i64 - 1),
                mesh.node_label(k as i64),
                mesh.node_label(k as i64 + 1),
            );
            let (zl, zr) = ((x(p) - x(prev)) / (p - prev) as f64, (x(next) - x(p)) / (next - p) as f64);
            for d in 2..=s.n {
                let w = (d - 1) as f64 / 2.0;
                e += w * (phi(&pot, d as f64 * zl) + phi(&pot, d as f64 * zr));
            }
        }
        let e = e * chain.epsilon();
        let got = model.internal_energy(&cfg).unwrap();
        prop_assert!((got - e).abs() < 1e-12, "{got} vs {e}");
    }

    #[test]
    fn w1inf_error_ignores_constant_shifts(s in setups(1..=3), shift in -1.0f64..1.0) {
        let mesh = s.mesh();
        let model = Model::new(ModelKind::Qcp, &mesh, &s.pot()).unwrap();
        let a = mesh.reconstruct(&s.config(&model));
        let mut b = a.clone();
        b.shift(shift);
        prop_assert!(w1inf_error(&a, &b).unwrap() < 1e-14);
    }

    #[test]
    fn lennard_jones_derivatives_match_differences(z in 0.8f64..1.2) {
        let pot = PairPotential::lennard_jones(3.25).unwrap();
        let h = 1e-6 * z;
        let d = pot.phi(z).unwrap();
        let fd1 = (phi(&pot, z + h) - phi(&pot, z - h)) / (2.0 * h);
        let fd2 = (pot.phi(z + h).unwrap().first - pot.phi(z - h).unwrap().first) / (2.0 * h);
        prop_assert!((fd1 - d.first).abs() <= 1e-6 * d.first.abs().max(1.0));
        prop_assert!((fd2 - d.second).abs() <= 1e-6 * d.second.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn analytic_derivatives_match_finite_differences(s in setups(2..=3)) {
        let mesh = s.mesh();
        let pot = s.pot();
        let force = ExternalForce::bulk(s.n_atoms);
        for kind in ModelKind::ALL {
            let model = Model::for_kind(kind, &mesh, &pot).unwrap();
            let fd = fd_check(&model, &s.config(&model), &force).unwrap();
            prop_assert!(fd.gradient_deviation <= 1e-6, "{kind}: {:?}", fd);
            prop_assert!(fd.hessian_deviation <= 1e-5, "{kind}: {:?}", fd);
        }
    }

    #[test]
    fn hessians_are_symmetric(s in setups(1..=3)) {
        let mesh = s.mesh();
        let pot = s.pot();
        for kind in ModelKind::ALL {
            if kind.check_geometry(s.n, mesh.nonlocal_width()).is_err() {
                continue;
            }
            let model = Model::for_kind(kind, &mesh, &pot).unwrap();
            let rep = model.report(&s.config(&model), &ExternalForce::zeros(s.n_atoms)).unwrap();
            prop_assert!(rep.hessian.max_asymmetry() < 1e-12);
        }
    }

    #[test]
    fn solutions_do_not_depend_on_the_gauge_node(s in setups(2..=3), which in 0usize..1000) {
        let mesh = s.mesh();
        let model = Model::new(ModelKind::Qcp, &mesh, &s.pot()).unwrap();
        let force = ExternalForce::bulk(s.n_atoms);
        let gaps = |gauge: usize| {
            let cfg = SolverConfig { gauge_node: gauge, ..SolverConfig::default() };
            let res = solve(&model, &force, model.uniform_config(1.0), &cfg).unwrap();
            prop_assert!(res.converged);
            Ok(model.reconstruct(&res.configuration).scaled_gaps())
        };
        let a = gaps(0)?;
        let b = gaps(which % mesh.n_nodes())?;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_uniform_lattice_relaxes(s in setups(2..=3)) {
        let mesh = s.mesh();
        for kind in [ModelKind::Qcp, ModelKind::Qcpm, ModelKind::GcrStandard] {
            let model = Model::new(kind, &mesh, &s.pot()).unwrap();
            let res = solve(
                &model,
                &ExternalForce::zeros(s.n_atoms),
                s.config(&model),
                &SolverConfig::default(),
            )
            .unwrap();
            prop_assert!(res.converged && res.iterations <= 20);
            for g in model.reconstruct(&res.configuration).scaled_gaps() {
                prop_assert!((g - 1.0).abs() < 1e-10, "{kind}: gap {g}");
            }
        }
    }

    #[test]
    fn qcp_keeps_atomistic_minimizers_stable(s in setups(2..=3)) {
        let mesh = s.mesh();
        let pot = s.pot();
        let force = ExternalForce::localized_pair(s.n_atoms);
        let atom = Model::atomistic(s.n_atoms, &pot).unwrap();
        let eq = solve(&atom, &force, atom.uniform_config(1.0), &SolverConfig::default()).unwrap();
        prop_assert!(eq.converged);
        prop_assert!(min_reduced_eigenvalue(&atom, &eq.configuration) > 0.0);

        let qcp = Model::new(ModelKind::Qcp, &mesh, &pot).unwrap();
        let restricted = mesh.restrict(&atom.reconstruct(&eq.configuration)).unwrap();
        prop_assert!(min_reduced_eigenvalue(&qcp, &restricted) >= -1e-10);
    }
}

/// Smallest eigenvalue of the Hessian with unknown 0 removed.
fn min_reduced_eigenvalue(model: &Model, cfg: &QcConfiguration) -> f64 {
    let rep = model.report(cfg, &ExternalForce::zeros(model.n_atoms())).unwrap();
    let dense = rep.hessian.to_dense();
    let k = dense.len() - 1;
    let h = DMatrix::from_fn(k, k, |i, j| dense[i + 1][j + 1]);
    SymmetricEigen::new(h).eigenvalues.min()
}
