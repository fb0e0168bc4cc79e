//! Reconstruction coefficients of the GCR variants.
//!
//! In the reconstruction `u_j <- C u_j + (1 - C)(u_i + (j - i)(u_{i+sgn} - u_i))`
//! the coefficient `C_ij` blends the true position of `j` with its
//! Cauchy-Born extrapolation from `i`. The energies themselves are assembled
//! in closed form; these tables document the variants and back the checks.

/// Interface-relative coefficient table.
///
/// Offsets count from the left interface atom (offset 0): negative offsets are
/// local atoms, `0..width` the nonlocal block. Entries are mirrored onto the
/// right interface `width - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcrCoefficients {
    entries: Vec<((i64, i64), f64)>,
}

impl GcrCoefficients {
    /// Standard reconstruction coefficients for `n <= 3`.
    pub fn standard() -> Self {
        Self {
            entries: vec![
                ((-1, 0), 1.0),
                ((-1, 1), 1.0),
                ((-1, 2), 1.0),
                ((-2, 1), 2.0 / 3.0),
                ((1, -2), 1.0 / 3.0),
            ],
        }
    }

    /// The standard table with its rows shifted by `n - 1 = 2` atoms.
    pub fn shifted() -> Self {
        Self {
            entries: vec![
                ((-1, 0), 1.0),
                ((-1, 1), 1.0),
                ((-2, 1), 1.0),
                ((-1, 2), 1.0),
                ((-3, 0), 2.0 / 3.0),
                ((0, -3), 1.0 / 3.0),
            ],
        }
    }

    pub fn entries(&self) -> &[((i64, i64), f64)] {
        &self.entries
    }

    /// `C_ij` with the QCE rule as fall-through.
    pub fn coefficient(&self, i: i64, j: i64, width: i64) -> f64 {
        let last = width - 1;
        let mirrored = (last - i, last - j);
        self.entries
            .iter()
            .find(|(key, _)| *key == (i, j) || *key == mirrored)
            .map_or_else(|| qce_coefficient(i, j, width), |(_, c)| *c)
    }
}

/// Plain QCE reconstruction coefficients.
pub fn qce_coefficient(i: i64, j: i64, width: i64) -> f64 {
    let last = width - 1;
    let interior = |k: i64| 0 < k && k < last;
    if i < 0 || i > last {
        1.0
    } else if interior(i) {
        0.0
    } else if interior(j) {
        1.0
    } else {
        0.0
    }
}
