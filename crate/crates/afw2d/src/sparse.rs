//! Compressed sparse row matrices and a sparse LU wrapper.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Duplicate entries are summed; explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Csr {
        // stable, so mirrored entries are summed in the same order
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            debug_assert!(i < nrows && j < ncols);
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { nrows, ncols, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col[k], self.val[k])))
    }

    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.nrows, |i, _| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.val[k] * x[self.col[k]]).sum()
        })
    }

    pub fn mul_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.ncols);
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        Csr::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    /// max |A - A^T| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.iter() {
            let k = (t.row_ptr[i]..t.row_ptr[i + 1]).find(|&k| t.col[k] == j);
            worst = worst.max((v - k.map_or(0.0, |k| t.val[k])).abs());
        }
        worst
    }

    /// Coordinate text format: one `row col value` line per entry, zero based.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("% {} {} {}\n", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.iter() {
            writeln!(s, "{i} {j} {v:.17e}").unwrap();
        }
        s
    }
}

/// Sparse LU factorization with row pivoting.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &Csr) -> Result<SparseLu> {
        if a.nrows != a.ncols {
            return Err(Error::Solver(format!("matrix is {}x{}", a.nrows, a.ncols)));
        }
        let t: Vec<Triplet<usize, usize, f64>> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &t)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Solver(format!("{e:?}")))?;
        Ok(SparseLu { n: a.nrows, lu })
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let mut x = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        let out = DVector::from_fn(self.n, |i, _| x[(i, 0)]);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Solver("factorization produced non-finite values".into()))
        }
    }
}
