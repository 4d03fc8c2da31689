//! Symmetric sparse matrices stored as their upper triangle in CSR form.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;

/// Symmetric matrix, upper triangle and diagonal in compressed rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricCsr {
    /// Builds from `(row, col, value)` triplets of the full matrix. Duplicates
    /// are summed in input order; only entries with `col >= row` are kept,
    /// which makes the stored matrix exactly symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut upper: Vec<(usize, usize, f64)> = triplets
            .iter()
            .copied()
            .filter(|&(i, j, _)| j >= i)
            .collect();
        // stable: equal keys keep insertion order, so sums are reproducible
        upper.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(upper.len());
        let mut vals: Vec<f64> = Vec::with_capacity(upper.len());
        let mut last = None;
        for (i, j, v) in upper {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries (upper triangle with diagonal).
    pub fn nnz_upper(&self) -> usize {
        self.vals.len()
    }

    /// Entries of the full matrix: off-diagonal pairs counted twice.
    pub fn nnz_full(&self) -> usize {
        2 * self.nnz_upper() - self.diagonal_count()
    }

    fn diagonal_count(&self) -> usize {
        (0..self.n)
            .filter(|&i| self.row(i).any(|(j, _)| j == i))
            .count()
    }

    /// Upper-triangle entries `(j, a_ij)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Row-parallel product; each row sums its entries in a fixed order, so
    /// the result does not depend on the thread count.
    pub fn par_matvec(&self, x: &[f64], lower: &LowerIndex) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for &(k, r) in &lower.entries[lower.ptr[i]..lower.ptr[i + 1]] {
                    s += self.vals[k] * x[r];
                }
                for (j, a) in self.row(i) {
                    if j != i {
                        s += a * x[j];
                    } else {
                        s += a * x[i];
                    }
                }
                s
            })
            .collect()
    }

    /// Transposed access pattern used by [`par_matvec`](Self::par_matvec).
    pub fn lower_index(&self) -> LowerIndex {
        let mut ptr = vec![0usize; self.n + 1];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    ptr[j + 1] += 1;
                }
            }
        }
        for i in 0..self.n {
            ptr[i + 1] += ptr[i];
        }
        let mut fill = ptr.clone();
        let mut entries = vec![(0, 0); ptr[self.n]];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j != i {
                    entries[fill[j]] = (k, i);
                    fill[j] += 1;
                }
            }
        }
        LowerIndex { ptr, entries }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                m[(i, j)] = a;
                m[(j, i)] = a;
            }
        }
        m
    }

    /// MatrixMarket `coordinate real symmetric`, lower triangle, 1-based.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz_upper())?;
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                writeln!(w, "{} {} {:e}", j + 1, i + 1, a)?;
            }
        }
        Ok(())
    }
}

/// For each row, the stored upper entries that sit in its column.
#[derive(Clone, Debug)]
pub struct LowerIndex {
    ptr: Vec<usize>,
    entries: Vec<(usize, usize)>,
}
