//! Pair-term assembly shared by all models.
//!
//! Every model energy is a weighted sum of pair potentials whose arguments
//! are affine in the nodal displacements:
//!
//! ```text
//! E = sum_t W_t phi(s * span_t + sum_k c_tk xi_k)
//! ```
//!
//! Gradients and Hessians follow from the rank-one structure of each term.

use std::collections::BTreeMap;

use crate::lattice::{wrap_index, NodalMesh};
use crate::potential::{PairPotential, PotentialError};
use crate::sparse::SymSparse;

/// Linear combination of atom positions (lattice units), by label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm(pub Vec<(i64, f64)>);

impl LinearForm {
    /// `x_to - x_from`.
    pub fn bond(from: i64, to: i64) -> Self {
        Self(vec![(to, 1.0), (from, -1.0)])
    }

    /// `scale * (x_to - x_from)`.
    pub fn scaled_bond(from: i64, to: i64, scale: f64) -> Self {
        Self(vec![(to, scale), (from, -scale)])
    }

    pub fn plus(mut self, other: LinearForm) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn scale(mut self, by: f64) -> Self {
        self.0.iter_mut().for_each(|(_, c)| *c *= by);
        self
    }
}

/// Maps atom labels to nodal coefficients.
pub(crate) enum Layout<'a> {
    /// Every atom is a node (node `k` is atom `k + 1`).
    Full(usize),
    Mesh(&'a NodalMesh),
}

impl Layout<'_> {
    pub fn n_nodes(&self) -> usize {
        match self {
            Layout::Full(n) => *n,
            Layout::Mesh(m) => m.n_nodes(),
        }
    }

    fn accumulate(&self, label: i64, c: f64, out: &mut BTreeMap<usize, f64>) {
        match self {
            Layout::Full(n) => *out.entry(wrap_index(label, *n)).or_default() += c,
            Layout::Mesh(m) => {
                for &(k, w) in m.representation(label).entries() {
                    *out.entry(k).or_default() += c * w;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Term {
    weight: f64,
    span: f64,
    coeffs: std::ops::Range<usize>,
    slots: std::ops::Range<usize>,
}

/// Collects weighted pair terms before compilation.
#[derive(Debug, Default)]
pub(crate) struct TermBuilder {
    terms: Vec<(f64, LinearForm)>,
}

impl TermBuilder {
    pub fn add(&mut self, weight: f64, form: LinearForm) {
        if weight != 0.0 {
            self.terms.push((weight, form));
        }
    }

    pub fn compile(self, layout: &Layout<'_>) -> TermSet {
        let dim = layout.n_nodes();
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut coeff_buf: Vec<(usize, f64)> = Vec::new();
        let mut pairs = Vec::new();
        let mut map = BTreeMap::new();
        for (weight, form) in self.terms {
            map.clear();
            let mut span = 0.0;
            for &(label, c) in &form.0 {
                span += c * label as f64;
                layout.accumulate(label, c, &mut map);
            }
            let start = coeff_buf.len();
            coeff_buf.extend(map.iter().filter(|(_, c)| **c != 0.0).map(|(&k, &c)| (k, c)));
            let coeffs = start..coeff_buf.len();
            for &(a, _) in &coeff_buf[coeffs.clone()] {
                for &(b, _) in &coeff_buf[coeffs.clone()] {
                    if a <= b {
                        pairs.push((a, b));
                    }
                }
            }
            terms.push(Term {
                weight,
                span,
                coeffs,
                slots: 0..0,
            });
        }
        let pattern = SymSparse::with_pattern(dim, pairs);
        let mut slot_buf = Vec::new();
        for t in &mut terms {
            let start = slot_buf.len();
            let cs = &coeff_buf[t.coeffs.clone()];
            for &(a, _) in cs {
                for &(b, _) in cs {
                    slot_buf.push(pattern.slot(a, b).expect("pattern covers term"));
                }
            }
            t.slots = start..slot_buf.len();
        }
        TermSet {
            dim,
            terms,
            coeffs: coeff_buf,
            slots: slot_buf,
            pattern,
        }
    }
}

/// Compiled pair terms over a fixed set of nodal unknowns.
#[derive(Debug, Clone)]
pub(crate) struct TermSet {
    dim: usize,
    terms: Vec<Term>,
    coeffs: Vec<(usize, f64)>,
    slots: Vec<usize>,
    pattern: SymSparse,
}

impl TermSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn argument(&self, t: &Term, stretch: f64, xi: &[f64]) -> f64 {
        stretch * t.span
            + self.coeffs[t.coeffs.clone()]
                .iter()
                .map(|&(k, c)| c * xi[k])
                .sum::<f64>()
    }

    pub fn energy(&self, pot: &PairPotential, stretch: f64, xi: &[f64]) -> Result<f64, PotentialError> {
        let mut e = 0.0;
        for t in &self.terms {
            e += t.weight * pot.phi(self.argument(t, stretch, xi))?.value;
        }
        Ok(e)
    }

    /// Energy, gradient and (optionally) Hessian with respect to `xi`.
    pub fn evaluate(
        &self,
        pot: &PairPotential,
        stretch: f64,
        xi: &[f64],
        with_hessian: bool,
    ) -> Result<(f64, Vec<f64>, Option<SymSparse>), PotentialError> {
        let mut e = 0.0;
        let mut g = vec![0.0; self.dim];
        let mut h = with_hessian.then(|| self.pattern.clone());
        for t in &self.terms {
            let d = pot.phi(self.argument(t, stretch, xi))?;
            e += t.weight * d.value;
            let cs = &self.coeffs[t.coeffs.clone()];
            for &(k, c) in cs {
                g[k] += t.weight * d.first * c;
            }
            if let Some(h) = h.as_mut() {
                let vals = h.values_mut();
                let w2 = t.weight * d.second;
                let mut s = t.slots.start;
                for &(_, ca) in cs {
                    for &(_, cb) in cs {
                        vals[self.slots[s]] += w2 * ca * cb;
                        s += 1;
                    }
                }
            }
        }
        Ok((e, g, h))
    }

    /// `E(xi + h e_k) - E(xi - h e_k)`, summed over the terms touching `k` only.
    pub fn energy_difference(
        &self,
        pot: &PairPotential,
        stretch: f64,
        xi: &[f64],
        k: usize,
        h: f64,
    ) -> Result<f64, PotentialError> {
        let mut d = 0.0;
        for t in &self.terms {
            let c = self.coeffs[t.coeffs.clone()]
                .iter()
                .find(|(j, _)| *j == k)
                .map(|(_, c)| *c);
            if let Some(c) = c {
                let z = self.argument(t, stretch, xi);
                d += t.weight * (pot.phi(z + c * h)?.value - pot.phi(z - c * h)?.value);
            }
        }
        Ok(d)
    }
}
