//! Symmetric sparse system in CSR form.
//!
//! Row entries are stored in ascending column order, so a row dot product
//! always accumulates in the same order and the matvec is bitwise
//! reproducible regardless of how rows are scheduled across threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::par::Exec;

#[cfg(feature = "parallel")]
const MATVEC_CHUNK: usize = 512;

/// Sparse symmetric matrix plus a right-hand side of matching dimension.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    /// Builds from per-row entry lists (columns already ascending).
    pub(crate) fn from_rows(rows: Vec<Vec<(u32, f64)>>, rhs: Vec<f64>) -> Self {
        let dim = rows.len();
        debug_assert_eq!(rhs.len(), dim);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseSystem {
            dim,
            row_ptr,
            cols,
            vals,
            rhs,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// their input order. The right-hand side starts at zero.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "system dimension must be positive".to_string(),
            ));
        }
        let mut per_row: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::InvalidParameter(format!(
                    "triplet ({r}, {c}) outside dimension {dim}"
                )));
            }
            per_row[r].push((c as u32, v));
        }
        let rows = per_row
            .into_iter()
            .map(|mut row| {
                row.sort_by_key(|&(c, _)| c);
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
                for (c, v) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged
            })
            .collect();
        Ok(SparseSystem::from_rows(rows, vec![0.0; dim]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Entries of row `i` as `(col, value)`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                if c == i {
                    d[i] = v;
                }
            }
        }
        d
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        let mut acc = 0.0;
        for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
            acc += v * x[*c as usize];
        }
        acc
    }

    /// `y = A x`; rows computed independently, fixed accumulation order.
    pub(crate) fn matvec_into(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        match exec {
            Exec::Sequential => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = self.row_dot(i, x);
                }
            }
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                y.par_chunks_mut(MATVEC_CHUNK)
                    .enumerate()
                    .for_each(|(ci, chunk)| {
                        let base = ci * MATVEC_CHUNK;
                        for (k, yi) in chunk.iter_mut().enumerate() {
                            *yi = self.row_dot(base + k, x);
                        }
                    });
            }
        }
    }
}
