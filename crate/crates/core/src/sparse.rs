//! Compressed sparse row storage and the direct solver wrapper.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Result, VemError};

/// Row-compressed matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sorts triplets by `(row, col)` and sums duplicates in input order, so
    /// the result does not depend on how the triplets were produced.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `b - A x` with compensated (twice-working-precision) row sums, so
    /// iterative refinement can reach a forward error near round-off even
    /// for ill-conditioned systems.
    pub fn residual_compensated(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                let mut acc = TwoSumAcc::new(b[i]);
                for (j, v) in self.row(i) {
                    let p = -v * x[j];
                    let e = (-v).mul_add(x[j], -p);
                    acc.add(p);
                    acc.add(e);
                }
                acc.value()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    /// Sub-matrix on the half-open index ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut t = Vec::new();
        for i in rows.clone() {
            for (j, v) in self.row(i) {
                if cols.contains(&j) {
                    t.push((i - rows.start, j - cols.start, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }

    /// Sub-matrix on arbitrary sorted index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut cmap = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            cmap[j] = k;
        }
        let mut t = Vec::new();
        for (a, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if cmap[j] != usize::MAX {
                    t.push((a, cmap[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sum with a running compensation term (error-free transformations).
struct TwoSumAcc {
    s: f64,
    c: f64,
}

impl TwoSumAcc {
    fn new(s: f64) -> Self {
        Self { s, c: 0.0 }
    }
    fn add(&mut self, a: f64) {
        let t = self.s + a;
        let z = t - self.s;
        self.c += (self.s - (t - z)) + (a - z);
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// LU factorization of a square sparse matrix, reusable across right-hand sides.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(VemError::Solver(format!(
                "matrix is {}x{}, not square",
                a.nrows, a.ncols
            )));
        }
        let t: Vec<Triplet<usize, usize, f64>> = a
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &t)
            .map_err(|e| VemError::Solver(format!("sparse matrix creation failed: {e:?}")))?;
        let lu = m
            .sp_lu()
            .map_err(|e| VemError::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(Self { lu, n: a.nrows })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(VemError::Solver("singular factorization (non-finite solution)".into()));
        }
        Ok(out)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, 3.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.col_idx, vec![1, 0, 2]);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 2.0]), vec![2.0, 6.0]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn lu_solves_small_system() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 2, 2.0),
                (2, 0, -1.0),
            ],
        );
        let lu = SparseLu::new(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
        // compensated residual recovers cancellation lost in plain arithmetic
        let c = CsrMatrix::from_triplets(1, 3, vec![(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]);
        let r = c.residual_compensated(&[1e16, 1.0, -1e16], &[0.0]);
        assert_eq!(r, vec![-1.0]);
        let s = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(SparseLu::new(&s).and_then(|lu| lu.solve(&[1.0, 1.0])).is_err());
    }
}
