//! Energy-based quasicontinuum methods for periodic one-dimensional chains.
//!
//! A chain of `N` atoms with period one carries pair interactions up to the
//! `n`-th neighbour. Coupling models approximate its energy on a mesh of
//! nodal atoms; [`solver::solve`] finds equilibria and [`experiments`]
//! measures their error against the full atomistic solution.
//!
//! ```
//! use qcchain::lattice::NodalMesh;
//! use qcchain::models::{ghost_force, ModelKind};
//! use qcchain::potential::PairPotential;
//!
//! let pot = PairPotential::lennard_jones(3.25).unwrap();
//! let mesh = NodalMesh::build(2000, 1000, 2, 3, 0, pot.neighbor_range()).unwrap();
//! let gf = ghost_force(ModelKind::Qcp, &mesh, 1.0, &pot).unwrap();
//! assert!(gf.max_norm < 1e-13);
//! ```

// `!(x > 0.0)` rejects NaN on purpose; the band solver indexes by design.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod experiments;
pub mod lattice;
pub mod models;
pub mod potential;
pub mod report;
pub mod solver;
pub mod sparse;

pub use lattice::{NodalMesh, PeriodicChain, QcConfiguration};
pub use models::{ExternalForce, Model, ModelKind};
pub use potential::PairPotential;
pub use solver::{solve, SolverConfig};
