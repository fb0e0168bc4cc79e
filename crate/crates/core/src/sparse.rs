//! Symmetric sparse storage and a banded LU solver.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearSolveError {
    #[error("zero pivot in column {0}")]
    SingularPivot(usize),
    #[error("right-hand side has {got} entries, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Square matrix in compressed row form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparse {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SymSparse {
    /// Empty matrix with the sparsity pattern given by the symmetric closure of `pairs`.
    pub fn with_pattern(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for (i, j) in pairs {
            rows[i].push(j);
            rows[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let values = vec![0.0; cols.len()];
        Self {
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Storage slot of entry `(i, j)`, if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Nonzero entries `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Largest `|A_ij - A_ji|` over the pattern.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim())
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim())
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

/// General band matrix with `kl` sub- and `ku` super-diagonals, stored by
/// rows with room for the fill-in created by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` to entry `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.ku + self.kl {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Solves `A x = b` by LU with partial pivoting, consuming the matrix.
    pub fn solve(mut self, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        let n = self.n;
        if rhs.len() != n {
            return Err(LinearSolveError::DimensionMismatch {
                got: rhs.len(),
                expected: n,
            });
        }
        let mut b = rhs.to_vec();
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= tiny || best == 0.0 {
                return Err(LinearSolveError::SingularPivot(k));
            }
            if piv != k {
                for j in k..=last_col {
                    let (a, c) = (self.idx(k, j), self.idx(piv, j));
                    self.data.swap(a, c);
                }
                b.swap(k, piv);
            }
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.data[ir] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ir] = 0.0;
                for j in k + 1..=last_col {
                    let (a, c) = (self.idx(r, j), self.idx(k, j));
                    self.data[a] -= l * self.data[c];
                }
                b[r] -= l * b[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=last_col {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
        Ok(b)
    }
}
