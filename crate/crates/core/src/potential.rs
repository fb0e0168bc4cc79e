//! Pair interaction laws and the Cauchy-Born energy density.
//!
//! All arguments are separations measured in lattice spacings, so `z = 1`
//! is the reference nearest-neighbour distance. Potentials are extended to
//! negative arguments evenly: `phi(-z) = phi(z)`, `phi'` odd, `phi''` even.
//!
//! The interaction range `n` is a neighbour count, fixed once from the
//! cutoff radius. Energies sum over index offsets `1..=n` and never
//! re-check deformed distances against the cutoff.

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential singular at zero separation")]
    ZeroSeparation,
    #[error("Cauchy-Born density requires a positive strain, got {0}")]
    NonPositiveStrain(f64),
    #[error("separation {z} outside tabulated range [{min}, {max}]")]
    OutsideTable { z: f64, min: f64, max: f64 },
    #[error("invalid cutoff radius {0}: need at least one neighbour")]
    InvalidCutoff(f64),
    #[error("invalid potential table: {0}")]
    InvalidTable(String),
}

/// Value and first two derivatives of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl Derivs {
    pub const ZERO: Derivs = Derivs {
        value: 0.0,
        first: 0.0,
        second: 0.0,
    };
}

/// One sample of a tabulated potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSample {
    pub z: f64,
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Tabulated potential on positive separations, interpolated with quintic
/// Hermite polynomials so that value, slope and curvature are continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    samples: Vec<TableSample>,
}

impl PotentialTable {
    pub fn new(samples: Vec<TableSample>) -> Result<Self, PotentialError> {
        if samples.len() < 2 {
            return Err(PotentialError::InvalidTable(
                "need at least two samples".into(),
            ));
        }
        if samples[0].z <= 0.0 {
            return Err(PotentialError::InvalidTable(
                "samples must lie at positive separations".into(),
            ));
        }
        for w in samples.windows(2) {
            if !(w[1].z > w[0].z) {
                return Err(PotentialError::InvalidTable(
                    "sample separations must be strictly increasing".into(),
                ));
            }
        }
        if samples
            .iter()
            .any(|s| !(s.value.is_finite() && s.first.is_finite() && s.second.is_finite()))
        {
            return Err(PotentialError::InvalidTable("non-finite sample".into()));
        }
        Ok(Self { samples })
    }

    /// Samples an analytic function on `count` equidistant points of `[lo, hi]`.
    pub fn sample<F>(lo: f64, hi: f64, count: usize, f: F) -> Result<Self, PotentialError>
    where
        F: Fn(f64) -> Derivs,
    {
        if count < 2 || !(hi > lo) {
            return Err(PotentialError::InvalidTable("empty sampling range".into()));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let samples = (0..count)
            .map(|k| {
                let z = if k + 1 == count { hi } else { lo + step * k as f64 };
                let d = f(z);
                TableSample {
                    z,
                    value: d.value,
                    first: d.first,
                    second: d.second,
                }
            })
            .collect();
        Self::new(samples)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].z, self.samples[self.samples.len() - 1].z)
    }

    fn eval(&self, z: f64) -> Result<Derivs, PotentialError> {
        let (min, max) = self.range();
        if !(z >= min && z <= max) {
            return Err(PotentialError::OutsideTable { z, min, max });
        }
        let hi = self
            .samples
            .partition_point(|s| s.z <= z)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[hi - 1], &self.samples[hi]);
        let h = b.z - a.z;
        let t = (z - a.z) / h;
        Ok(quintic_hermite(a, b, h, t))
    }
}

fn quintic_hermite(a: &TableSample, b: &TableSample, h: f64, t: f64) -> Derivs {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    // basis functions and their t-derivatives
    let h0 = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
    ];
    let h1 = [
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
    ];
    let h2 = [
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
    ];
    let h3 = [
        0.5 * (t3 - 2.0 * t4 + t5),
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
        0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
    ];
    let h4 = [
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
    ];
    let h5 = [
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        60.0 * t - 180.0 * t2 + 120.0 * t3,
    ];
    let combine = |d: usize| {
        a.value * h0[d]
            + h * a.first * h1[d]
            + h * h * a.second * h2[d]
            + h * h * b.second * h3[d]
            + h * b.first * h4[d]
            + b.value * h5[d]
    };
    Derivs {
        value: combine(0),
        first: combine(1) / h,
        second: combine(2) / (h * h),
    }
}

#[derive(Clone)]
pub enum PotentialKind {
    /// `phi(z) = z^-12 - 2 z^-6`, minimum `-1` at `z = 1`.
    LennardJones,
    Table(Arc<PotentialTable>),
}

impl std::fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialKind::LennardJones => write!(f, "LennardJones"),
            PotentialKind::Table(t) => write!(f, "Table({} samples)", t.samples.len()),
        }
    }
}

/// A pair potential truncated to a fixed number of neighbours.
#[derive(Debug, Clone)]
pub struct PairPotential {
    kind: PotentialKind,
    cutoff_radius: f64,
    neighbor_range: usize,
}

impl PairPotential {
    pub fn lennard_jones(cutoff_radius: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::LennardJones, cutoff_radius)
    }

    pub fn tabulated(table: PotentialTable, cutoff_radius: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Table(Arc::new(table)), cutoff_radius)
    }

    pub fn new(kind: PotentialKind, cutoff_radius: f64) -> Result<Self, PotentialError> {
        let neighbor_range = neighbor_range_for(cutoff_radius)?;
        Ok(Self {
            kind,
            cutoff_radius,
            neighbor_range,
        })
    }

    /// Same law with the interaction range overridden, keeping the cutoff
    /// radius as the largest neighbour distance that is still summed.
    pub fn with_neighbor_range(&self, n: usize) -> Result<Self, PotentialError> {
        if n == 0 {
            return Err(PotentialError::InvalidCutoff(0.0));
        }
        Ok(Self {
            kind: self.kind.clone(),
            cutoff_radius: n as f64,
            neighbor_range: n,
        })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    /// Largest neighbour offset `n` contributing to the energy.
    pub fn neighbor_range(&self) -> usize {
        self.neighbor_range
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PotentialKind::LennardJones => "lennard-jones",
            PotentialKind::Table(_) => "table",
        }
    }

    /// `phi`, `phi'` and `phi''` at separation `z` (lattice units).
    pub fn phi(&self, z: f64) -> Result<Derivs, PotentialError> {
        if z == 0.0 {
            return Err(PotentialError::ZeroSeparation);
        }
        let r = z.abs();
        let d = match &self.kind {
            PotentialKind::LennardJones => lennard_jones(r),
            PotentialKind::Table(t) => t.eval(r)?,
        };
        Ok(if z < 0.0 {
            Derivs {
                first: -d.first,
                ..d
            }
        } else {
            d
        })
    }

    /// Cauchy-Born density `Phi(z) = sum_{m=1..n} phi(m z)` and its derivatives.
    pub fn cb_density(&self, z: f64) -> Result<Derivs, PotentialError> {
        if !(z > 0.0) {
            return Err(PotentialError::NonPositiveStrain(z));
        }
        let mut out = Derivs::ZERO;
        for m in 1..=self.neighbor_range {
            let mf = m as f64;
            let d = self.phi(mf * z)?;
            out.value += d.value;
            out.first += mf * d.first;
            out.second += mf * mf * d.second;
        }
        Ok(out)
    }
}

/// `n` is the largest integer not exceeding the cutoff radius.
pub fn neighbor_range_for(cutoff_radius: f64) -> Result<usize, PotentialError> {
    if !(cutoff_radius >= 1.0) || !cutoff_radius.is_finite() {
        return Err(PotentialError::InvalidCutoff(cutoff_radius));
    }
    Ok(cutoff_radius.floor() as usize)
}

fn lennard_jones(z: f64) -> Derivs {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let inv6 = inv2 * inv2 * inv2;
    let inv12 = inv6 * inv6;
    Derivs {
        value: inv12 - 2.0 * inv6,
        first: (-12.0 * inv12 + 12.0 * inv6) * inv,
        second: (156.0 * inv12 - 84.0 * inv6) * inv2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lj(cutoff: f64) -> PairPotential {
        PairPotential::lennard_jones(cutoff).unwrap()
    }

    #[test]
    fn lj_minimum_at_unit_separation() {
        let d = lj(3.25).phi(1.0).unwrap();
        assert_eq!(d.value, -1.0);
        assert_eq!(d.first, 0.0);
        assert_eq!(d.second, 72.0);
    }

    #[test]
    fn lj_at_two_and_minus_two() {
        let p = lj(3.25);
        let d = p.phi(2.0).unwrap();
        assert_eq!(d.value, -0.031005859375);
        assert_eq!(d.first, 0.09228515625);
        let m = p.phi(-2.0).unwrap();
        assert_eq!(m.value, -0.031005859375);
        assert_eq!(m.first, -0.09228515625);
        assert_eq!(m.second, d.second);
    }

    #[test]
    fn zero_separation_is_an_error() {
        assert_eq!(lj(3.25).phi(0.0), Err(PotentialError::ZeroSeparation));
    }

    #[test]
    fn neighbor_range_is_floor_of_cutoff() {
        assert_eq!(lj(3.25).neighbor_range(), 3);
        assert_eq!(lj(2.5).neighbor_range(), 2);
        assert_eq!(lj(1.0).neighbor_range(), 1);
        assert!(PairPotential::lennard_jones(0.9).is_err());
    }

    #[test]
    fn cb_density_sums_neighbour_shells() {
        assert_eq!(lj(1.5).cb_density(1.0).unwrap().value, -1.0);
        // phi(1) + phi(2) + phi(3) computed independently
        let expected = -1.0 + (2f64.powi(-12) - 2.0 * 2f64.powi(-6))
            + (3f64.powi(-12) - 2.0 * 3f64.powi(-6));
        let d = lj(3.25).cb_density(1.0).unwrap();
        assert!((d.value - expected).abs() < 1e-15);
        assert!((d.value - (-1.03374746)).abs() < 5e-9);
        let p = lj(3.25);
        let slope = p.phi(1.0).unwrap().first
            + 2.0 * p.phi(2.0).unwrap().first
            + 3.0 * p.phi(3.0).unwrap().first;
        assert_eq!(d.first, slope);
        let h = 1e-6;
        let fd = (p.cb_density(1.0 + h).unwrap().value - p.cb_density(1.0 - h).unwrap().value)
            / (2.0 * h);
        assert!((fd - d.first).abs() < 1e-8);
    }

    #[test]
    fn cb_density_rejects_compression_through_zero() {
        assert!(lj(3.25).cb_density(0.0).is_err());
        assert!(lj(3.25).cb_density(-1.0).is_err());
    }

    #[test]
    fn third_neighbour_curvature_magnitude() {
        let v = (2.0 / 9.0 * lj(3.25).phi(3.0).unwrap().second).abs();
        assert!((0.0025..=0.0035).contains(&v), "{v}");
    }

    #[test]
    fn table_reproduces_lennard_jones() {
        let table = PotentialTable::sample(0.5, 4.0, 3501, lennard_jones).unwrap();
        let p = PairPotential::tabulated(table, 3.25).unwrap();
        for &z in &[0.93, 1.0, 1.37, 2.0, 2.71, 3.5] {
            let a = p.phi(z).unwrap();
            let b = lennard_jones(z);
            assert!((a.value - b.value).abs() < 1e-10, "{z}");
            assert!((a.first - b.first).abs() < 1e-7, "{z}");
            assert!((a.second - b.second).abs() < 1e-4, "{z}");
        }
        assert!(matches!(
            p.phi(4.5),
            Err(PotentialError::OutsideTable { .. })
        ));
        assert_eq!(p.phi(-2.0).unwrap().first, -p.phi(2.0).unwrap().first);
    }

    #[test]
    fn table_rejects_unsorted_samples() {
        let s = |z| TableSample {
            z,
            value: 0.0,
            first: 0.0,
            second: 0.0,
        };
        assert!(PotentialTable::new(vec![s(1.0), s(1.0)]).is_err());
        assert!(PotentialTable::new(vec![s(1.0)]).is_err());
    }
}
