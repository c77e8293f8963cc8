//! Minimal compressed-row sparse matrix used for the assembled operator blocks.

use std::collections::BTreeMap;

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != 0.0 {
            self.entries.push((row, col, val));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csr(mut self) -> Csr {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// y += alpha A x
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi += alpha * s;
        }
    }

    /// r = b − A (x + x_lo) for a solution carried as an unevaluated sum of
    /// two doubles. Each row is accumulated in about twice the working
    /// precision (error-free product and sum transformations), so that the
    /// residual stays meaningful when x has entries of very different size.
    pub fn residual_compensated(&self, x: &[f64], x_lo: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(x_lo.len(), self.ncols);
        assert_eq!(b.len(), self.nrows);
        (0..self.nrows)
            .map(|i| {
                let mut hi = b[i];
                let mut lo = 0.0;
                // Subtracts p + e, where e is the rounding error of p.
                let mut sub = |p: f64, e: f64| {
                    let t = hi - p;
                    let z = t - hi;
                    lo += (hi - (t - z)) + (-p - z) - e;
                    hi = t;
                };
                for (j, v) in self.row(i) {
                    let p = v * x[j];
                    let e = v.mul_add(x[j], -p);
                    sub(p, e);
                    sub(v * x_lo[j], 0.0);
                }
                hi + lo
            })
            .collect()
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for (i, j, v) in self.iter() {
            t.push(j, i, v);
        }
        t.to_csr()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Sub-matrix restricted to the given row and column ranges.
    pub fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Csr {
        let mut t = Triplets::new(rows.len(), cols.len());
        for i in rows.clone() {
            for (j, v) in self.row(i) {
                if cols.contains(&j) {
                    t.push(i - rows.start, j - cols.start, v);
                }
            }
        }
        t.to_csr()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest relative deviation |a_ij - a_ji| / max|a|; the matrix must be square.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, j, v) in self.iter() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst / scale
    }

    pub fn to_dense_map(&self) -> BTreeMap<(usize, usize), f64> {
        self.iter().map(|(i, j, v)| ((i, j), v)).collect()
    }
}

/// Direct sparse LU solve of a square system, for small auxiliary problems.
pub fn lu_solve(a: &Csr, b: &[f64]) -> crate::Result<Vec<f64>> {
    use faer::prelude::Solve;
    use faer::sparse::{SparseColMat, Triplet};
    let trip: Vec<Triplet<usize, usize, f64>> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &trip).map_err(|e| crate::Error::Factorization(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| crate::Error::Factorization(format!("{e:?}")))?;
    let rhs = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
}

/// CSR matrix with a fixed, precomputed sparsity pattern that accumulates
/// values in place.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    csr: Csr,
}

impl PatternBuilder {
    /// `cols(i)` lists the admissible columns of row `i` (any order, duplicates allowed).
    pub fn new(nrows: usize, ncols: usize, mut cols: impl FnMut(usize, &mut Vec<usize>)) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut buf = Vec::new();
        for i in 0..nrows {
            buf.clear();
            cols(i, &mut buf);
            buf.sort_unstable();
            buf.dedup();
            indices.extend_from_slice(&buf);
            indptr.push(indices.len());
        }
        let data = vec![0.0; indices.len()];
        Self { csr: Csr { nrows, ncols, indptr, indices, data } }
    }

    /// Adds `v` at (i, j); panics if the entry is outside the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let r = self.csr.indptr[i]..self.csr.indptr[i + 1];
        let k = self.csr.indices[r.clone()].binary_search(&j).unwrap_or_else(|_| panic!("({i}, {j}) outside sparsity pattern"));
        self.csr.data[r.start + k] += v;
    }

    /// Drops explicit zeros and returns the matrix.
    pub fn finish(self) -> Csr {
        let c = self.csr;
        let mut t = Triplets::new(c.nrows, c.ncols);
        for (i, j, v) in c.iter() {
            t.push(i, j, v);
        }
        t.to_csr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(2, 3);
        t.push(1, 2, 1.5);
        t.push(0, 0, 1.0);
        t.push(1, 2, 0.5);
        let a = t.to_csr();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 2.0]), vec![1.0, 4.0]);
    }

    #[test]
    fn transpose_and_slice() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 1, 2.0);
        t.push(2, 0, -1.0);
        t.push(2, 2, 4.0);
        let a = t.to_csr();
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 2.0);
        assert_eq!(at.get(0, 2), -1.0);
        let s = a.slice(1..3, 0..2);
        assert_eq!(s.nrows, 2);
        assert_eq!(s.get(1, 0), -1.0);
        assert_eq!(s.nnz(), 1);
        assert!(a.asymmetry() > 0.0);
    }

    #[test]
    fn compensated_residual_survives_cancellation() {
        let mut t = Triplets::new(1, 3);
        t.push(0, 0, 1.0);
        t.push(0, 1, -1.0);
        t.push(0, 2, 1.0);
        let a = t.to_csr();
        let x = [1e16, 1e16 - 2.0, 1.0];
        // Plain summation loses the small terms entirely.
        assert_eq!(a.residual_compensated(&x, &[0.0; 3], &[3.0]), vec![0.0]);
        let x = [1e16 + 2.0, 1e16, 1e-3];
        assert_eq!(a.residual_compensated(&x, &[0.0; 3], &[2.0]), vec![-1e-3]);
        assert_eq!(a.residual_compensated(&[1e16, 1e16, 0.0], &[2.0, 0.0, 1e-3], &[2.0]), vec![-1e-3]);
    }

    #[test]
    fn pattern_builder_accumulates() {
        let mut b = PatternBuilder::new(2, 3, |i, out| out.extend([2 - i, 0, 2 - i]));
        b.add(0, 2, 1.0);
        b.add(0, 2, 2.0);
        b.add(1, 0, -1.0);
        let a = b.finish();
        assert_eq!(a.get(0, 2), 3.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.nnz(), 2);
    }
}
