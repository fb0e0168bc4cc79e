//! Periodic chains, nodal meshes and the linear reconstruction operator.
//!
//! Atoms carry integer labels `1..=N`; any other integer label refers to a
//! periodic image, `u_{i+N} = u_i + L` where `L` is the period length
//! (`L = 1` for an unstretched chain).
//!
//! Internally a configuration is stored as a mean stretch `s` plus a
//! periodic displacement field measured in lattice spacings:
//!
//! ```text
//! u_i = eps * (s * i + xi_i),      xi_{i+N} = xi_i,      eps = 1 / N
//! ```
//!
//! so pair arguments `(u_i - u_j) / eps = s (i - j) + xi_i - xi_j` are formed
//! without cancellation between large absolute positions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh violates interface separation h >= n+1 (element {left}..{right} has length {len}, n = {range})")]
    InterfaceSeparation {
        left: i64,
        right: i64,
        len: i64,
        range: usize,
    },
    #[error("local element {left}..{right} of length {len} is shorter than the interaction range {range}")]
    ShortLocalElement {
        left: i64,
        right: i64,
        len: i64,
        range: usize,
    },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("configuration has {got} entries, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// A full periodic chain of `N` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicChain {
    stretch: f64,
    displacement: Vec<f64>,
}

impl PeriodicChain {
    /// Uniform chain `u_i = eps * z * i`.
    pub fn uniform(n_atoms: usize, z: f64) -> Self {
        Self {
            stretch: z,
            displacement: vec![0.0; n_atoms],
        }
    }

    /// Builds a chain from displacements `xi_i` (lattice units, atom `i` at index `i - 1`).
    pub fn from_displacements(stretch: f64, displacement: Vec<f64>) -> Self {
        Self {
            stretch,
            displacement,
        }
    }

    /// Builds a chain from absolute positions `u_1..u_N` with period length `stretch`.
    pub fn from_positions(stretch: f64, positions: &[f64]) -> Self {
        let n = positions.len();
        let eps = 1.0 / n as f64;
        let displacement = positions
            .iter()
            .enumerate()
            .map(|(k, &u)| u / eps - stretch * (k + 1) as f64)
            .collect();
        Self {
            stretch,
            displacement,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.displacement.len()
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n_atoms() as f64
    }

    /// Mean stretch `s`; the period length is `s` (in units where `eps N = 1`).
    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn displacements(&self) -> &[f64] {
        &self.displacement
    }

    pub fn displacements_mut(&mut self) -> &mut [f64] {
        &mut self.displacement
    }

    /// Displacement `xi_i` of any (possibly image) label.
    pub fn displacement(&self, label: i64) -> f64 {
        self.displacement[wrap_index(label, self.n_atoms())]
    }

    /// Position in lattice units `u_i / eps` of any label.
    pub fn scaled_position(&self, label: i64) -> f64 {
        self.stretch * label as f64 + self.displacement(label)
    }

    /// Absolute position `u_i` of any label.
    pub fn position(&self, label: i64) -> f64 {
        self.epsilon() * self.scaled_position(label)
    }

    pub fn positions(&self) -> Vec<f64> {
        (1..=self.n_atoms() as i64).map(|i| self.position(i)).collect()
    }

    /// Nearest-neighbour gap `(u_{i+1} - u_i) / eps` for `i = 1..=N`.
    pub fn scaled_gaps(&self) -> Vec<f64> {
        let n = self.n_atoms();
        (0..n)
            .map(|k| self.stretch + self.displacement[(k + 1) % n] - self.displacement[k])
            .collect()
    }

    /// Adds a constant (lattice units) to every position.
    pub fn shift(&mut self, by: f64) {
        self.displacement.iter_mut().for_each(|x| *x += by);
    }
}

/// Zero-based storage index of a label.
pub fn wrap_index(label: i64, n_atoms: usize) -> usize {
    (label - 1).rem_euclid(n_atoms as i64) as usize
}

/// Coefficients expressing one atom position through the nodal unknowns:
/// `u_beta = sum_k coeff_k u_{i_k} + wrap * L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representation {
    entries: [(usize, f64); 2],
    len: usize,
    /// Multiple of the period length added by periodic wrapping.
    pub wrap: f64,
}

impl Representation {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries[..self.len]
    }

    pub fn coefficient(&self, node: usize) -> f64 {
        self.entries()
            .iter()
            .filter(|(k, _)| *k == node)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Element between two consecutive nodes (in the cyclic order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Node index of the left end.
    pub left_node: usize,
    /// Node index of the right end (wraps to 0 for the last element).
    pub right_node: usize,
    /// Unwrapped labels of the ends, `right > left`.
    pub left: i64,
    pub right: i64,
}

impl Element {
    pub fn len(&self) -> i64 {
        self.right - self.left
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Nodal atoms with a contiguous fully resolved (nonlocal) block.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalMesh {
    n_atoms: usize,
    nodes: Vec<i64>,
    nonlocal: (i64, i64),
    nonlocal_nodes: (usize, usize),
    neighbor_range: usize,
}

impl NodalMesh {
    /// Validates and builds a mesh from explicit nodal labels.
    ///
    /// `nonlocal` is the inclusive label range of the fully resolved block.
    /// Every element touching that block must have length at least `n + 1`,
    /// every other local element length at least `n`.
    pub fn new(
        n_atoms: usize,
        mut nodes: Vec<i64>,
        nonlocal: (i64, i64),
        neighbor_range: usize,
    ) -> Result<Self, MeshError> {
        let n = n_atoms as i64;
        if neighbor_range == 0 {
            return Err(MeshError::Invalid("interaction range must be positive".into()));
        }
        if n_atoms <= 2 * neighbor_range {
            return Err(MeshError::Invalid(format!(
                "{n_atoms} atoms cannot hold interaction range {neighbor_range}"
            )));
        }
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.first().is_some_and(|&i| i < 1) || nodes.last().is_some_and(|&i| i > n) {
            return Err(MeshError::Invalid("nodal labels must lie in 1..=N".into()));
        }
        let (a, b) = nonlocal;
        if !(1 <= a && a <= b && b <= n) {
            return Err(MeshError::Invalid(format!(
                "nonlocal range [{a}, {b}] must lie inside 1..={n}"
            )));
        }
        if b - a + 1 == n {
            return Err(MeshError::Invalid(
                "nonlocal region consumes the period, no admissible local element".into(),
            ));
        }
        if ((b - a + 1) as usize) < neighbor_range {
            return Err(MeshError::Invalid(format!(
                "nonlocal region of width {} is narrower than the interaction range {neighbor_range}",
                b - a + 1
            )));
        }
        let first = nodes.partition_point(|&i| i < a);
        let last = nodes.partition_point(|&i| i <= b);
        if (last - first) as i64 != b - a + 1 {
            return Err(MeshError::Invalid(
                "every atom of the nonlocal region must be nodal".into(),
            ));
        }
        let mesh = Self {
            n_atoms,
            nodes,
            nonlocal,
            nonlocal_nodes: (first, last - 1),
            neighbor_range,
        };
        for e in mesh.local_elements() {
            let touches = mesh.is_nonlocal(e.left) || mesh.is_nonlocal(e.right);
            let range = neighbor_range as i64;
            if touches && e.len() < range + 1 {
                return Err(MeshError::InterfaceSeparation {
                    left: e.left,
                    right: e.right,
                    len: e.len(),
                    range: neighbor_range,
                });
            }
            if e.len() < range {
                return Err(MeshError::ShortLocalElement {
                    left: e.left,
                    right: e.right,
                    len: e.len(),
                    range: neighbor_range,
                });
            }
        }
        Ok(mesh)
    }

    /// Mesh around a defect occupying atoms `M..M+P-1`, padded by `L` atoms
    /// on each side, with `local_nodes` extra nodal atoms spread as evenly as
    /// integer rounding allows through the local region.
    pub fn build(
        n_atoms: usize,
        defect_center: i64,
        defect_width: i64,
        pad: i64,
        local_nodes: usize,
        neighbor_range: usize,
    ) -> Result<Self, MeshError> {
        let n = n_atoms as i64;
        if defect_width < 1 || pad < 0 {
            return Err(MeshError::Invalid("defect width must be positive, pad non-negative".into()));
        }
        if n < 2 * (defect_width + 2 * pad) {
            return Err(MeshError::Invalid(format!(
                "N = {n} is smaller than 2(P + 2L) = {}",
                2 * (defect_width + 2 * pad)
            )));
        }
        let a = defect_center - pad;
        let b = defect_center + defect_width - 1 + pad;
        let span = a + n - b;
        if local_nodes as i64 >= span {
            return Err(MeshError::Invalid(format!(
                "{local_nodes} local nodes do not fit in a local region of {} atoms",
                span - 1
            )));
        }
        let mut nodes: Vec<i64> = (a..=b).collect();
        let slots = local_nodes as i64 + 1;
        for j in 1..slots {
            // nearest integer to b + j * span / slots, ties rounding down
            let num = 2 * j * span - slots;
            let offset = num.div_euclid(2 * slots) + i64::from(num.rem_euclid(2 * slots) != 0);
            let label = b + offset;
            nodes.push((label - 1).rem_euclid(n) + 1);
        }
        Self::new(n_atoms, nodes, (a, b), neighbor_range)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n_atoms as f64
    }

    /// Number of nodal atoms `K`.
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Degrees of freedom after fixing one position.
    pub fn dof(&self) -> usize {
        self.n_nodes() - 1
    }

    pub fn neighbor_range(&self) -> usize {
        self.neighbor_range
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    /// Inclusive label range of the nonlocal block.
    pub fn nonlocal_range(&self) -> (i64, i64) {
        self.nonlocal
    }

    /// Node indices of the first and last nonlocal atoms.
    pub fn nonlocal_nodes(&self) -> (usize, usize) {
        self.nonlocal_nodes
    }

    pub fn nonlocal_width(&self) -> usize {
        (self.nonlocal.1 - self.nonlocal.0 + 1) as usize
    }

    pub fn is_nonlocal(&self, label: i64) -> bool {
        let base = wrap_index(label, self.n_atoms) as i64 + 1;
        (self.nonlocal.0..=self.nonlocal.1).contains(&base)
    }

    /// Unwrapped label of node `j`, where `j` may run past either end.
    pub fn node_label(&self, j: i64) -> i64 {
        let k = self.n_nodes() as i64;
        self.nodes[j.rem_euclid(k) as usize] + j.div_euclid(k) * self.n_atoms as i64
    }

    /// All elements in cyclic order; element `k` runs from node `k` to node `k + 1`.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        let k = self.n_nodes();
        (0..k).map(move |j| Element {
            left_node: j,
            right_node: (j + 1) % k,
            left: self.node_label(j as i64),
            right: self.node_label(j as i64 + 1),
        })
    }

    /// Elements outside the nonlocal block, starting with the one right of it.
    pub fn local_elements(&self) -> impl Iterator<Item = Element> + '_ {
        let k = self.n_nodes();
        let start = self.nonlocal_nodes.1;
        let count = k - (self.nonlocal_nodes.1 - self.nonlocal_nodes.0);
        (0..count).map(move |off| {
            let j = (start + off) as i64;
            Element {
                left_node: j as usize % k,
                right_node: (j as usize + 1) % k,
                left: self.node_label(j),
                right: self.node_label(j + 1),
            }
        })
    }

    /// Node indices that lie strictly inside the local region.
    pub fn interior_local_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let (first, last) = self.nonlocal_nodes;
        (0..self.n_nodes()).filter(move |&k| k < first || k > last)
    }

    /// Node index of `label` if it is nodal (any periodic image).
    pub fn node_of(&self, label: i64) -> Option<usize> {
        let base = wrap_index(label, self.n_atoms) as i64 + 1;
        self.nodes.binary_search(&base).ok()
    }

    /// Index `j` (unwrapped) of the last node at or left of `label`.
    fn node_at_or_left(&self, label: i64) -> i64 {
        let n = self.n_atoms as i64;
        let k = self.n_nodes() as i64;
        let base = (label - 1).rem_euclid(n) + 1;
        let period = (label - base) / n;
        let pos = self.nodes.partition_point(|&i| i <= base) as i64;
        period * k + pos - 1
    }

    /// Representation of any atom label through the nodal unknowns.
    pub fn representation(&self, label: i64) -> Representation {
        let k = self.n_nodes() as i64;
        let j = self.node_at_or_left(label);
        let left = self.node_label(j);
        let wrap_left = j.div_euclid(k) as f64;
        let node_left = j.rem_euclid(k) as usize;
        if left == label {
            return Representation {
                entries: [(node_left, 1.0), (0, 0.0)],
                len: 1,
                wrap: wrap_left,
            };
        }
        let right = self.node_label(j + 1);
        let wrap_right = (j + 1).div_euclid(k) as f64;
        let node_right = (j + 1).rem_euclid(k) as usize;
        let h = (right - left) as f64;
        let wl = (right - label) as f64 / h;
        let wr = (label - left) as f64 / h;
        let wrap = wl * wrap_left + wr * wrap_right;
        if node_left == node_right {
            return Representation {
                entries: [(node_left, 1.0), (0, 0.0)],
                len: 1,
                wrap,
            };
        }
        Representation {
            entries: [(node_left, wl), (node_right, wr)],
            len: 2,
            wrap,
        }
    }

    /// Full chain obtained by linear interpolation between nodes.
    pub fn reconstruct(&self, config: &QcConfiguration) -> PeriodicChain {
        let mut disp = vec![0.0; self.n_atoms];
        for e in self.elements() {
            let (xl, xr) = (config.displacement[e.left_node], config.displacement[e.right_node]);
            let h = e.len() as f64;
            for label in e.left..e.right {
                let t = (label - e.left) as f64 / h;
                disp[wrap_index(label, self.n_atoms)] = if label == e.left {
                    xl
                } else {
                    (1.0 - t) * xl + t * xr
                };
            }
        }
        PeriodicChain::from_displacements(config.stretch, disp)
    }

    /// Nodal values of a full chain.
    pub fn restrict(&self, chain: &PeriodicChain) -> Result<QcConfiguration, MeshError> {
        if chain.n_atoms() != self.n_atoms {
            return Err(MeshError::LengthMismatch {
                got: chain.n_atoms(),
                expected: self.n_atoms,
            });
        }
        let disp = self.nodes.iter().map(|&i| chain.displacement(i)).collect();
        Ok(QcConfiguration::from_displacements(chain.stretch(), disp))
    }

    /// Uniform lattice `u_i = eps z i` restricted to the nodes.
    pub fn uniform_config(&self, z: f64) -> QcConfiguration {
        QcConfiguration::from_displacements(z, vec![0.0; self.n_nodes()])
    }
}

/// Nodal unknowns of a QC approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct QcConfiguration {
    stretch: f64,
    displacement: Vec<f64>,
}

impl QcConfiguration {
    pub fn from_displacements(stretch: f64, displacement: Vec<f64>) -> Self {
        Self {
            stretch,
            displacement,
        }
    }

    /// Builds a configuration from absolute nodal positions `u_{i_k}`.
    pub fn from_positions(
        mesh: &NodalMesh,
        stretch: f64,
        positions: &[f64],
    ) -> Result<Self, MeshError> {
        if positions.len() != mesh.n_nodes() {
            return Err(MeshError::LengthMismatch {
                got: positions.len(),
                expected: mesh.n_nodes(),
            });
        }
        let eps = mesh.epsilon();
        let disp = positions
            .iter()
            .zip(mesh.nodes())
            .map(|(&u, &i)| u / eps - stretch * i as f64)
            .collect();
        Ok(Self::from_displacements(stretch, disp))
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn displacements(&self) -> &[f64] {
        &self.displacement
    }

    pub fn displacements_mut(&mut self) -> &mut [f64] {
        &mut self.displacement
    }

    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    /// Absolute nodal positions `u_{i_k}`.
    pub fn positions(&self, mesh: &NodalMesh) -> Vec<f64> {
        let eps = mesh.epsilon();
        mesh.nodes()
            .iter()
            .zip(&self.displacement)
            .map(|(&i, &x)| eps * (self.stretch * i as f64 + x))
            .collect()
    }

    /// Checks that nodal positions increase strictly around the period.
    pub fn is_admissible(&self, mesh: &NodalMesh) -> bool {
        self.len() == mesh.n_nodes()
            && mesh.elements().all(|e| {
                self.stretch * e.len() as f64 + self.displacement[e.right_node]
                    - self.displacement[e.left_node]
                    > 0.0
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh_100(local: usize) -> NodalMesh {
        NodalMesh::build(100, 50, 2, 3, local, 3).unwrap()
    }

    #[test]
    fn single_local_element_wraps_the_period() {
        let mesh = mesh_100(0);
        assert_eq!(mesh.nodes(), (47..=54).collect::<Vec<_>>().as_slice());
        let local: Vec<_> = mesh.local_elements().collect();
        assert_eq!(local.len(), 1);
        assert_eq!((local[0].left, local[0].right), (54, 147));
        assert_eq!(local[0].len(), 93);
    }

    #[test]
    fn local_nodes_partition_the_local_region() {
        let mesh = mesh_100(3);
        assert_eq!(mesh.n_nodes(), 11);
        let lens: Vec<i64> = mesh.local_elements().map(|e| e.len()).collect();
        assert_eq!(lens.len(), 4);
        assert_eq!(lens.iter().sum::<i64>(), 93);
        let (lo, hi) = (lens.iter().min().unwrap(), lens.iter().max().unwrap());
        assert!(hi - lo <= 1, "{lens:?}");
    }

    #[test]
    fn oversized_nonlocal_region_is_rejected() {
        assert!(NodalMesh::build(20, 10, 2, 8, 0, 1).is_err());
    }

    #[test]
    fn thin_interface_element_is_rejected() {
        let err = NodalMesh::new(20, vec![5, 6, 7, 8, 10], (5, 8), 3).unwrap_err();
        assert!(matches!(err, MeshError::InterfaceSeparation { .. }), "{err}");
        assert!(err.to_string().contains("h >= n+1"));
    }

    #[test]
    fn interpolation_inside_element() {
        let mesh = NodalMesh::new(8, vec![4, 8], (8, 8), 1).unwrap();
        // positions u_4 = 0.4 scaled by eps, u_8 = 0.8
        let cfg = QcConfiguration::from_positions(&mesh, 1.0, &[0.5, 1.0]).unwrap();
        let chain = mesh.reconstruct(&cfg);
        let u = chain.positions();
        for (i, &x) in u.iter().enumerate() {
            assert!((x - 0.125 * (i + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn representation_weights() {
        let mesh = NodalMesh::new(12, vec![4, 5, 6, 8], (4, 6), 1).unwrap();
        let r = mesh.representation(5);
        assert_eq!(r.entries(), &[(1, 1.0)]);
        assert_eq!(r.wrap, 0.0);
        let r = mesh.representation(7);
        assert_eq!(r.entries(), &[(2, 0.5), (3, 0.5)]);
        // atom 9 sits in the wrapping element 8 .. 16 (= 4 + 12)
        let r = mesh.representation(9);
        assert_eq!(r.entries(), &[(3, 0.875), (0, 0.125)]);
        assert_eq!(r.wrap, 0.125);
        // atom 1 lies in the same element, one period earlier
        let r = mesh.representation(1);
        assert_eq!(r.entries(), &[(3, 0.375), (0, 0.625)]);
        assert_eq!(r.wrap, -0.375);
    }

    #[test]
    fn representation_of_first_interior_atom() {
        let mesh = NodalMesh::new(16, vec![4, 8, 9, 10, 11, 12], (8, 12), 1).unwrap();
        let r = mesh.representation(5);
        assert_eq!(r.entries(), &[(0, 0.75), (1, 0.25)]);
    }

    #[test]
    fn uniform_config_reconstructs_uniform_chain() {
        let mesh = mesh_100(3);
        let chain = mesh.reconstruct(&mesh.uniform_config(1.02));
        for g in chain.scaled_gaps() {
            assert!((g - 1.02).abs() < 1e-14);
        }
        let chain = mesh.reconstruct(&mesh.uniform_config(1.0));
        for (k, u) in chain.positions().iter().enumerate() {
            assert!((u - (k + 1) as f64 / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn restrict_then_reconstruct_is_identity_on_qc_chains() {
        let mesh = mesh_100(5);
        let disp: Vec<f64> = (0..mesh.n_nodes()).map(|k| 0.03 * (k as f64).sin()).collect();
        let cfg = QcConfiguration::from_displacements(1.0, disp);
        let chain = mesh.reconstruct(&cfg);
        let back = mesh.restrict(&chain).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(mesh.reconstruct(&back), chain);
    }
}
