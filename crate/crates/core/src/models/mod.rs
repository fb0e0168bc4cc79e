//! Coupling models: energy, gradient and Hessian of each QC method.
//!
//! All derivatives are taken with respect to positions in lattice units,
//! `x_i = u_i / eps`, so a bond contributes `eps * phi'` to the gradient of
//! its end atoms. The unknowns are the nodal displacements `xi_k` stored in a
//! [`QcConfiguration`].

mod builders;
mod gcr;
mod terms;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{wrap_index, MeshError, NodalMesh, PeriodicChain, QcConfiguration};
use crate::potential::{PairPotential, PotentialError};
use crate::sparse::SymSparse;

pub use gcr::GcrCoefficients;
pub use terms::LinearForm;
use terms::{Layout, TermBuilder, TermSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("QNL undefined below second-neighbor range")]
    QnlRange,
    #[error("QNL needs a nonlocal region of width at least 2n = {needed}, got {width}")]
    QnlWidth { needed: usize, width: usize },
    #[error("GCR coefficients are tabulated only for n = 2 and n = 3, got n = {0}")]
    GcrRange(usize),
    #[error("inverted bond between atoms {left} and {right}")]
    InvertedBond { left: i64, right: i64 },
    #[error("potential interaction range {potential} does not match mesh range {mesh}")]
    RangeMismatch { potential: usize, mesh: usize },
    #[error("force vector has {got} entries, expected {expected}")]
    ForceLength { got: usize, expected: usize },
    #[error("configuration has {got} unknowns, expected {expected}")]
    ConfigLength { got: usize, expected: usize },
    #[error("unknown model '{0}' (expected atomistic, qce, qnl, gcr, gcr-shifted, qcp or qcpm)")]
    UnknownModel(String),
    #[error("the atomistic model has no mesh; build it with Model::atomistic")]
    AtomisticOnMesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelKind {
    Atomistic,
    Qce,
    Qnl,
    GcrStandard,
    GcrShifted,
    Qcp,
    Qcpm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Atomistic,
        ModelKind::Qce,
        ModelKind::Qnl,
        ModelKind::GcrStandard,
        ModelKind::GcrShifted,
        ModelKind::Qcp,
        ModelKind::Qcpm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Atomistic => "atomistic",
            ModelKind::Qce => "qce",
            ModelKind::Qnl => "qnl",
            ModelKind::GcrStandard => "gcr",
            ModelKind::GcrShifted => "gcr-shifted",
            ModelKind::Qcp => "qcp",
            ModelKind::Qcpm => "qcpm",
        }
    }

    /// Coefficient table for the GCR variants.
    pub fn gcr_coefficients(self) -> Option<GcrCoefficients> {
        match self {
            ModelKind::GcrStandard => Some(GcrCoefficients::standard()),
            ModelKind::GcrShifted => Some(GcrCoefficients::shifted()),
            _ => None,
        }
    }

    /// Checks that the model is defined for interaction range `n` and the given
    /// nonlocal width.
    pub fn check_geometry(self, n: usize, nonlocal_width: usize) -> Result<(), ModelError> {
        match self {
            ModelKind::Qnl if n < 2 => Err(ModelError::QnlRange),
            ModelKind::Qnl if nonlocal_width < 2 * n => Err(ModelError::QnlWidth {
                needed: 2 * n,
                width: nonlocal_width,
            }),
            ModelKind::GcrStandard | ModelKind::GcrShifted if !(2..=3).contains(&n) => {
                Err(ModelError::GcrRange(n))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "atomistic" => ModelKind::Atomistic,
            "qce" => ModelKind::Qce,
            "qnl" => ModelKind::Qnl,
            "gcr" | "gcr-standard" => ModelKind::GcrStandard,
            "gcr-shifted" => ModelKind::GcrShifted,
            "qcp" => ModelKind::Qcp,
            "qcpm" => ModelKind::Qcpm,
            _ => return Err(ModelError::UnknownModel(s.to_string())),
        })
    }
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> Self {
        k.name().to_string()
    }
}

impl TryFrom<String> for ModelKind {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// External force per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForce {
    f: Vec<f64>,
}

impl ExternalForce {
    pub fn new(f: Vec<f64>) -> Self {
        Self { f }
    }

    pub fn zeros(n_atoms: usize) -> Self {
        Self::new(vec![0.0; n_atoms])
    }

    /// Subtracts the mean so that the forces sum to zero.
    pub fn zero_sum(mut f: Vec<f64>) -> Self {
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        f.iter_mut().for_each(|v| *v -= mean);
        Self { f }
    }

    /// `-1` on atom `N/2` and `+1` on atom `N/2 + 1`.
    pub fn localized_pair(n_atoms: usize) -> Self {
        let mut f = vec![0.0; n_atoms];
        f[n_atoms / 2 - 1] = -1.0;
        f[n_atoms / 2] = 1.0;
        Self::new(f)
    }

    /// `+-10` on atoms `N/2`, `N/2 + 1` plus the smooth field
    /// `sin(1 + 2 pi i / N) / N`, projected to zero sum.
    pub fn bulk(n_atoms: usize) -> Self {
        let nf = n_atoms as f64;
        let mut f: Vec<f64> = (1..=n_atoms)
            .map(|i| (1.0 + 2.0 * std::f64::consts::PI * i as f64 / nf).sin() / nf)
            .collect();
        f[n_atoms / 2 - 1] += 10.0;
        f[n_atoms / 2] -= 10.0;
        Self::zero_sum(f)
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn n_atoms(&self) -> usize {
        self.f.len()
    }

    pub fn sum(&self) -> f64 {
        self.f.iter().sum()
    }
}

/// External load folded onto the nodal unknowns:
/// `E_ext = -eps^2 (sum_k coeffs_k xi_k + stretch * moment)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalLoad {
    pub coeffs: Vec<f64>,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymSparse,
}

/// A coupling model compiled for one mesh and potential.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    potential: PairPotential,
    mesh: Option<NodalMesh>,
    n_atoms: usize,
    terms: TermSet,
}

impl Model {
    /// Compiles `kind` on `mesh`. Use [`Model::atomistic`] for the full chain.
    pub fn new(kind: ModelKind, mesh: &NodalMesh, potential: &PairPotential) -> Result<Self, ModelError> {
        let n = potential.neighbor_range();
        if n != mesh.neighbor_range() {
            return Err(ModelError::RangeMismatch {
                potential: n,
                mesh: mesh.neighbor_range(),
            });
        }
        kind.check_geometry(n, mesh.nonlocal_width())?;
        let mut b = TermBuilder::default();
        match kind {
            ModelKind::Atomistic => return Err(ModelError::AtomisticOnMesh),
            ModelKind::Qce => builders::qce(mesh, &mut b),
            ModelKind::Qnl => builders::qnl(mesh, &mut b),
            ModelKind::GcrStandard => builders::gcr_standard(mesh, &mut b),
            ModelKind::GcrShifted => builders::gcr_shifted(mesh, &mut b),
            ModelKind::Qcp => builders::qcp(mesh, &mut b),
            ModelKind::Qcpm => builders::qcpm(mesh, &mut b),
        }
        Ok(Self {
            kind,
            potential: potential.clone(),
            mesh: Some(mesh.clone()),
            n_atoms: mesh.n_atoms(),
            terms: b.compile(&Layout::Mesh(mesh)),
        })
    }

    /// Full atomistic model: every atom is an unknown.
    pub fn atomistic(n_atoms: usize, potential: &PairPotential) -> Result<Self, ModelError> {
        let n = potential.neighbor_range();
        if n_atoms <= 2 * n {
            return Err(MeshError::Invalid(format!(
                "{n_atoms} atoms cannot hold interaction range {n}"
            ))
            .into());
        }
        let mut b = TermBuilder::default();
        builders::atomistic(n_atoms, n, &mut b);
        Ok(Self {
            kind: ModelKind::Atomistic,
            potential: potential.clone(),
            mesh: None,
            n_atoms,
            terms: b.compile(&Layout::Full(n_atoms)),
        })
    }

    /// [`Model::new`] for mesh-based kinds, [`Model::atomistic`] otherwise.
    pub fn for_kind(kind: ModelKind, mesh: &NodalMesh, potential: &PairPotential) -> Result<Self, ModelError> {
        match kind {
            ModelKind::Atomistic => Self::atomistic(mesh.n_atoms(), potential),
            _ => Self::new(kind, mesh, potential),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn potential(&self) -> &PairPotential {
        &self.potential
    }

    pub fn mesh(&self) -> Option<&NodalMesh> {
        self.mesh.as_ref()
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n_atoms as f64
    }

    /// Number of unknowns (`N` for the atomistic model, `K` otherwise).
    pub fn n_unknowns(&self) -> usize {
        self.terms.dim()
    }

    /// Number of compiled pair terms.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Atom label of unknown `k`.
    pub fn unknown_label(&self, k: usize) -> i64 {
        match &self.mesh {
            Some(m) => m.nodes()[k],
            None => k as i64 + 1,
        }
    }

    pub fn uniform_config(&self, z: f64) -> QcConfiguration {
        QcConfiguration::from_displacements(z, vec![0.0; self.n_unknowns()])
    }

    /// Full chain described by `cfg`.
    pub fn reconstruct(&self, cfg: &QcConfiguration) -> PeriodicChain {
        match &self.mesh {
            Some(m) => m.reconstruct(cfg),
            None => PeriodicChain::from_displacements(cfg.stretch(), cfg.displacements().to_vec()),
        }
    }

    /// Unknowns of this model restricted from a full chain.
    pub fn restrict(&self, chain: &PeriodicChain) -> Result<QcConfiguration, ModelError> {
        match &self.mesh {
            Some(m) => Ok(m.restrict(chain)?),
            None => {
                self.check_len(chain.n_atoms())?;
                Ok(QcConfiguration::from_displacements(
                    chain.stretch(),
                    chain.displacements().to_vec(),
                ))
            }
        }
    }

    fn check_len(&self, got: usize) -> Result<(), ModelError> {
        if got != self.n_unknowns() {
            return Err(ModelError::ConfigLength {
                got,
                expected: self.n_unknowns(),
            });
        }
        Ok(())
    }

    /// Folds an atomic force vector onto the unknowns.
    pub fn nodal_load(&self, force: &ExternalForce) -> Result<NodalLoad, ModelError> {
        if force.n_atoms() != self.n_atoms {
            return Err(ModelError::ForceLength {
                got: force.n_atoms(),
                expected: self.n_atoms,
            });
        }
        let mut coeffs = vec![0.0; self.n_unknowns()];
        let mut moment = 0.0;
        for (k, &f) in force.values().iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let label = k as i64 + 1;
            moment += f * label as f64;
            match &self.mesh {
                Some(m) => {
                    for &(node, w) in m.representation(label).entries() {
                        coeffs[node] += f * w;
                    }
                }
                None => coeffs[k] += f,
            }
        }
        Ok(NodalLoad { coeffs, moment })
    }

    /// Fails on the first non-positive nearest-neighbour gap between unknowns.
    pub fn check_admissible(&self, cfg: &QcConfiguration) -> Result<(), ModelError> {
        self.check_len(cfg.len())?;
        let xi = cfg.displacements();
        let k = xi.len();
        for j in 0..k {
            let (left, right) = match &self.mesh {
                Some(m) => (m.node_label(j as i64), m.node_label(j as i64 + 1)),
                None => (j as i64 + 1, j as i64 + 2),
            };
            let gap = cfg.stretch() * (right - left) as f64 + xi[(j + 1) % k] - xi[j];
            if gap.is_nan() || gap <= 0.0 {
                return Err(ModelError::InvertedBond {
                    left,
                    right: (wrap_index(right, self.n_atoms) + 1) as i64,
                });
            }
        }
        Ok(())
    }

    fn external_energy(&self, cfg: &QcConfiguration, load: &NodalLoad) -> f64 {
        let eps = self.epsilon();
        let dot: f64 = load.coeffs.iter().zip(cfg.displacements()).map(|(g, x)| g * x).sum();
        -eps * eps * (dot + cfg.stretch() * load.moment)
    }

    /// Internal energy only.
    pub fn internal_energy(&self, cfg: &QcConfiguration) -> Result<f64, ModelError> {
        self.check_admissible(cfg)?;
        Ok(self.terms.energy(&self.potential, cfg.stretch(), cfg.displacements())?)
    }

    /// Total energy with a precomputed load.
    pub fn energy(&self, cfg: &QcConfiguration, load: &NodalLoad) -> Result<f64, ModelError> {
        Ok(self.internal_energy(cfg)? + self.external_energy(cfg, load))
    }

    /// Energy and gradient with a precomputed load.
    pub fn gradient(&self, cfg: &QcConfiguration, load: &NodalLoad) -> Result<(f64, Vec<f64>), ModelError> {
        let (e, g, _) = self.evaluate(cfg, load, false)?;
        Ok((e, g))
    }

    /// Energy, gradient and Hessian with a precomputed load.
    pub fn report_with_load(&self, cfg: &QcConfiguration, load: &NodalLoad) -> Result<EnergyReport, ModelError> {
        let (energy, gradient, hessian) = self.evaluate(cfg, load, true)?;
        Ok(EnergyReport {
            energy,
            gradient,
            hessian: hessian.expect("hessian requested"),
        })
    }

    /// Energy, gradient and Hessian of the total energy.
    pub fn report(&self, cfg: &QcConfiguration, force: &ExternalForce) -> Result<EnergyReport, ModelError> {
        let load = self.nodal_load(force)?;
        self.report_with_load(cfg, &load)
    }

    /// Central energy difference `E(xi + h e_k) - E(xi - h e_k)` without
    /// cancellation from terms that do not involve unknown `k`.
    pub fn energy_difference(
        &self,
        cfg: &QcConfiguration,
        load: &NodalLoad,
        k: usize,
        h: f64,
    ) -> Result<f64, ModelError> {
        self.check_admissible(cfg)?;
        let d = self
            .terms
            .energy_difference(&self.potential, cfg.stretch(), cfg.displacements(), k, h)?;
        let eps2 = self.epsilon() * self.epsilon();
        Ok(d - eps2 * load.coeffs[k] * 2.0 * h)
    }

    fn evaluate(
        &self,
        cfg: &QcConfiguration,
        load: &NodalLoad,
        with_hessian: bool,
    ) -> Result<(f64, Vec<f64>, Option<SymSparse>), ModelError> {
        self.check_admissible(cfg)?;
        let (e, mut g, h) =
            self.terms
                .evaluate(&self.potential, cfg.stretch(), cfg.displacements(), with_hessian)?;
        let eps2 = self.epsilon() * self.epsilon();
        for (gk, lk) in g.iter_mut().zip(&load.coeffs) {
            *gk -= eps2 * lk;
        }
        Ok((e + self.external_energy(cfg, load), g, h))
    }
}

/// Force `-grad E` on each unknown of the uniform lattice with no external load.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostForce {
    pub kind: ModelKind,
    /// Atom label of each unknown.
    pub labels: Vec<i64>,
    pub force: Vec<f64>,
    pub max_norm: f64,
}

impl GhostForce {
    /// Force on the unknown at atom `label`, if it is one.
    pub fn at(&self, label: i64) -> Option<f64> {
        self.labels.iter().position(|&l| l == label).map(|k| self.force[k])
    }
}

/// Ghost-force probe: forces at `uniform_config(mesh, z)` with `f = 0`.
pub fn ghost_force(
    kind: ModelKind,
    mesh: &NodalMesh,
    z: f64,
    potential: &PairPotential,
) -> Result<GhostForce, ModelError> {
    let model = Model::for_kind(kind, mesh, potential)?;
    let load = model.nodal_load(&ExternalForce::zeros(mesh.n_atoms()))?;
    let (_, g) = model.gradient(&model.uniform_config(z), &load)?;
    let force: Vec<f64> = g.iter().map(|v| -v).collect();
    let max_norm = force.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let labels = (0..model.n_unknowns()).map(|k| model.unknown_label(k)).collect();
    Ok(GhostForce {
        kind,
        labels,
        force,
        max_norm,
    })
}

#[cfg(test)]
mod tests;
