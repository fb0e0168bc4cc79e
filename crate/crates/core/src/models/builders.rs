//! Pair-term generators for each coupling model.
//!
//! Labels follow the mesh convention: the nonlocal block is `[a, b]`, local
//! atoms left of `a` are reached by subtracting from `a`, local atoms right
//! of `b` by adding to `b` (periodic images are resolved by the mesh).

use super::terms::{LinearForm, TermBuilder};
use crate::lattice::NodalMesh;

fn nrange(mesh: &NodalMesh) -> i64 {
    mesh.neighbor_range() as i64
}

/// Every bond `(i, i + m)`, `m = 1..=n`, once per atom.
pub(crate) fn atomistic(n_atoms: usize, n: usize, b: &mut TermBuilder) {
    let eps = 1.0 / n_atoms as f64;
    for i in 1..=n_atoms as i64 {
        for m in 1..=n as i64 {
            b.add(eps, LinearForm::bond(i, i + m));
        }
    }
}

/// Half-weighted bonds seen from each nonlocal atom. `replace` may swap the
/// bond from atom `i` to the local neighbour at signed offset `off`.
fn nonlocal_half_bonds(
    mesh: &NodalMesh,
    b: &mut TermBuilder,
    replace: impl Fn(i64, i64) -> Option<LinearForm>,
) {
    let eps = mesh.epsilon();
    let (a, z) = mesh.nonlocal_range();
    let n = nrange(mesh);
    for i in a..=z {
        for m in 1..=n {
            for off in [m, -m] {
                let form = replace(i, off).unwrap_or_else(|| LinearForm::bond(i, i + off));
                b.add(0.5 * eps, form);
            }
        }
    }
}

/// Cauchy-Born energy of each local element. Half an atom is removed per
/// nonlocal end because that atom's self-energy is already carried by the
/// nonlocal half-bond sums.
fn local_cauchy_born(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let n = nrange(mesh);
    for e in mesh.local_elements() {
        let ends = [e.left, e.right].iter().filter(|&&l| mesh.is_nonlocal(l)).count();
        let h = e.len() as f64;
        let w = eps * (h - 0.5 * ends as f64);
        for m in 1..=n {
            b.add(w, LinearForm::scaled_bond(e.left, e.right, m as f64 / h));
        }
    }
}

pub(crate) fn qce(mesh: &NodalMesh, b: &mut TermBuilder) {
    nonlocal_half_bonds(mesh, b, |_, _| None);
    local_cauchy_born(mesh, b);
}

/// Atoms `a+1..a+n-1` (and mirror) see the local side through
/// `m (x_i - x_{i-1})` instead of the interpolated neighbour.
pub(crate) fn qnl(mesh: &NodalMesh, b: &mut TermBuilder) {
    let (a, z) = mesh.nonlocal_range();
    let n = nrange(mesh);
    nonlocal_half_bonds(mesh, b, |i, off| {
        let j = i + off;
        if off < 0 && j < a && i > a && i < a + n {
            Some(LinearForm::scaled_bond(i - 1, i, -off as f64))
        } else if off > 0 && j > z && i < z && i > z - n {
            Some(LinearForm::scaled_bond(i, i + 1, off as f64))
        } else {
            None
        }
    });
    local_cauchy_born(mesh, b);
}

/// Bonds with both ends in the nonlocal block.
fn qcp_nonlocal(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let (a, z) = mesh.nonlocal_range();
    let n = nrange(mesh);
    for i in a..=z {
        for m in 1..=n.min(z - i) {
            b.add(eps, LinearForm::bond(i, i + m));
        }
    }
}

/// Bonds inside one local element: `h + 1 - m` bonds of stretch `m y`.
fn qcp_elements(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let n = nrange(mesh);
    for e in mesh.local_elements() {
        let h = e.len();
        for m in 1..=n.min(h) {
            let w = eps * (h + 1 - m) as f64;
            b.add(w, LinearForm::scaled_bond(e.left, e.right, m as f64 / h as f64));
        }
    }
}

/// Bonds straddling a local/nonlocal interface.
fn qcp_interfaces(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let (a, z) = mesh.nonlocal_range();
    let n = nrange(mesh);
    for j in a - n + 1..a {
        for i in a + 1..=j + n {
            b.add(eps, LinearForm::bond(j, i));
        }
    }
    for i in z - n + 1..z {
        for j in z + 1..=i + n {
            b.add(eps, LinearForm::bond(i, j));
        }
    }
}

/// Interior local nodes with their neighbouring node labels `(prev, p, next)`.
fn interior_nodes(mesh: &NodalMesh) -> Vec<(i64, i64, i64)> {
    mesh.interior_local_nodes()
        .map(|k| {
            let k = k as i64;
            (mesh.node_label(k - 1), mesh.node_label(k), mesh.node_label(k + 1))
        })
        .collect()
}

/// Exact bonds crossing interior local nodes.
fn qcp_cross(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let n = nrange(mesh);
    for (_, p, _) in interior_nodes(mesh) {
        for d in 2..=n {
            for lo in p - d + 1..p {
                b.add(eps, LinearForm::bond(lo, lo + d));
            }
        }
    }
}

/// Cauchy-Born share replacing the crossing bonds at interior local nodes.
fn cauchy_born_shares(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let n = nrange(mesh);
    for (prev, p, next) in interior_nodes(mesh) {
        let (ha, hb) = ((p - prev) as f64, (next - p) as f64);
        for m in 2..=n {
            let w = eps * (m - 1) as f64 / 2.0;
            b.add(w, LinearForm::scaled_bond(prev, p, m as f64 / ha));
            b.add(w, LinearForm::scaled_bond(p, next, m as f64 / hb));
        }
    }
}

pub(crate) fn qcp(mesh: &NodalMesh, b: &mut TermBuilder) {
    qcp_nonlocal(mesh, b);
    qcp_elements(mesh, b);
    qcp_cross(mesh, b);
    qcp_interfaces(mesh, b);
}

pub(crate) fn qcpm(mesh: &NodalMesh, b: &mut TermBuilder) {
    qcp_nonlocal(mesh, b);
    qcp_elements(mesh, b);
    cauchy_born_shares(mesh, b);
    qcp_interfaces(mesh, b);
}

/// Adds `w * (phi(exact) - phi(cb))`.
fn bracket(b: &mut TermBuilder, w: f64, exact: LinearForm, cb: LinearForm) {
    b.add(w, exact);
    b.add(-w, cb);
}

/// Interface corrections of the shifted coefficient table, applied at both
/// interfaces.
fn shifted_brackets(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let n = nrange(mesh);
    let (a, z) = mesh.nonlocal_range();
    let half = 0.5 * eps;
    for side in [Side::Left(a), Side::Right(z)] {
        let bond = |p: i64, q: i64| side.bond(p, q);
        let cb = |p: i64, q: i64, s: f64| side.scaled_bond(p, q, s);
        bracket(b, half, bond(-1, 1), cb(-1, 0, 2.0));
        if n >= 3 {
            bracket(b, half, bond(-2, 1), cb(-2, -1, 3.0));
            bracket(b, half, bond(-1, 2), cb(-1, 0, 3.0));
            bracket(b, 2.0 / 3.0 * half, bond(-3, 0), cb(-3, -2, 3.0));
            bracket(b, 1.0 / 3.0 * half, bond(-3, 0), cb(-1, 0, 3.0));
        }
    }
}

/// Difference between the standard table and the shifted table (`n = 3`).
fn standard_difference(mesh: &NodalMesh, b: &mut TermBuilder) {
    let eps = mesh.epsilon();
    let (a, z) = mesh.nonlocal_range();
    for side in [Side::Left(a), Side::Right(z)] {
        let s = side.bond(-2, 1);
        let t1 = side.scaled_bond(-2, 1, 2.0 / 3.0).plus(side.bond(0, 1));
        let t2 = side.scaled_bond(-2, 1, 1.0 / 3.0).plus(side.scaled_bond(-2, -1, 2.0));
        b.add(0.5 * eps, t1);
        b.add(0.5 * eps, t2);
        b.add(-eps, s);
    }
}

pub(crate) fn gcr_shifted(mesh: &NodalMesh, b: &mut TermBuilder) {
    qce(mesh, b);
    shifted_brackets(mesh, b);
}

pub(crate) fn gcr_standard(mesh: &NodalMesh, b: &mut TermBuilder) {
    gcr_shifted(mesh, b);
    if mesh.neighbor_range() == 3 {
        standard_difference(mesh, b);
    }
}

/// Interface-relative labelling: offset `k` counts into the nonlocal block
/// for `k > 0` and into the local region for `k < 0`.
#[derive(Clone, Copy)]
enum Side {
    Left(i64),
    Right(i64),
}

impl Side {
    fn label(self, k: i64) -> i64 {
        match self {
            Side::Left(a) => a + k,
            Side::Right(z) => z - k,
        }
    }

    /// Bond between offsets `p < q` measured in the direction of increasing offset.
    fn bond(self, p: i64, q: i64) -> LinearForm {
        self.scaled_bond(p, q, 1.0)
    }

    fn scaled_bond(self, p: i64, q: i64, s: f64) -> LinearForm {
        let (lp, lq) = (self.label(p), self.label(q));
        if lp < lq {
            LinearForm::scaled_bond(lp, lq, s)
        } else {
            LinearForm::scaled_bond(lq, lp, s)
        }
    }
}
