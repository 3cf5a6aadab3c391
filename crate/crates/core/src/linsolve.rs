//! Compressed sparse row matrices and preconditioned conjugate gradients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(invalid(format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix")));
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Takes ownership of CSR arrays; column indices must be strictly
    /// increasing within each row.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || row_ptr[nrows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(invalid("inconsistent CSR arrays"));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(invalid(format!("row pointer decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&j| j >= ncols) {
                return Err(invalid(format!("bad column indices in row {i}")));
            }
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    triplets.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                a[(i, *j)] = *v;
            }
        }
        a
    }

    /// `y = A x`, rows in parallel.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(j, v)| v * x[*j]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Quadratic form `xᵀ A x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Symmetric up to `rel_tol` times the largest absolute entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = rel_tol * scale;
        (0..self.nrows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| (v - self.get(j, i)).abs() <= tol)
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
    /// Inverse of the diagonal blocks of the given size.
    BlockJacobi(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative residual `‖b − Ax‖/‖b‖` at which to stop.
    pub tol: f64,
    /// Defaults to `20 n` when `None`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOLERANCE, max_iter: None, preconditioner: Preconditioner::Diagonal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

enum Applied {
    Identity,
    Diagonal(Vec<f64>),
    Blocks { size: usize, inverses: Vec<f64> },
}

impl Applied {
    fn build(a: &CsrMatrix, kind: Preconditioner) -> Result<Self> {
        let n = a.nrows();
        match kind {
            Preconditioner::None => Ok(Applied::Identity),
            Preconditioner::Diagonal => {
                let d = a.diagonal();
                if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
                    return Err(invalid(format!("non-positive diagonal entry at row {i}")));
                }
                Ok(Applied::Diagonal(d.iter().map(|v| 1.0 / v).collect()))
            }
            Preconditioner::BlockJacobi(size) => {
                if size == 0 || n % size != 0 {
                    return Err(invalid(format!("block size {size} does not divide {n}")));
                }
                let blocks: Vec<Option<Vec<f64>>> = (0..n / size)
                    .into_par_iter()
                    .map(|b| {
                        let o = b * size;
                        let block = DMatrix::from_fn(size, size, |i, j| a.get(o + i, o + j));
                        block.cholesky().map(|c| c.inverse().as_slice().to_vec())
                    })
                    .collect();
                let mut inverses = Vec::with_capacity(n * size);
                for (b, inv) in blocks.into_iter().enumerate() {
                    let inv = inv.ok_or_else(|| invalid(format!("diagonal block {b} is not positive definite")))?;
                    inverses.extend(inv);
                }
                Ok(Applied::Blocks { size, inverses })
            }
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Applied::Identity => z.copy_from_slice(r),
            Applied::Diagonal(d) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(d) {
                    *zi = ri * di;
                }
            }
            Applied::Blocks { size, inverses } => {
                let s = *size;
                z.par_chunks_mut(s).zip(r.par_chunks(s)).zip(inverses.par_chunks(s * s)).for_each(|((zb, rb), inv)| {
                    // Column-major inverse; symmetric so either order works.
                    for i in 0..s {
                        zb[i] = (0..s).map(|j| inv[i + j * s] * rb[j]).sum();
                    }
                });
            }
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolveOptions) -> Result<SolveStats> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || x.len() != n {
        return Err(invalid(format!(
            "dimension mismatch: matrix {}x{}, rhs {}, guess {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !a.is_symmetric(1e-12) {
        return Err(invalid("matrix is not symmetric"));
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let precond = Applied::build(a, opts.preconditioner)?;
    let max_iter = opts.max_iter.unwrap_or(20 * n.max(1));

    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut stats = SolveStats { iterations: 0, relative_residual: dot(&r, &r).sqrt() / b_norm, converged: false };

    while stats.relative_residual > opts.tol {
        if stats.iterations >= max_iter {
            return Err(Error::NonConvergence(stats));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence(stats));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        stats.iterations += 1;
        stats.relative_residual = dot(&r, &r).sqrt() / b_norm;
    }
    stats.converged = true;
    Ok(stats)
}

/// Dense Cholesky solve, used as a reference on small systems.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = a.to_dense().cholesky().ok_or_else(|| invalid("matrix is not positive definite"))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.row(1).0, &[0, 2]);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 2.0]), vec![2.0, 2.0]);
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn cg_on_1d_laplacian() {
        let n = 50;
        let a = laplace_1d(n);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&exact);
        for pc in [Preconditioner::None, Preconditioner::Diagonal, Preconditioner::BlockJacobi(5)] {
            let mut x = vec![0.0; n];
            let opts = SolveOptions { tol: 1e-12, preconditioner: pc, ..Default::default() };
            let stats = cg_solve(&a, &b, &mut x, &opts).unwrap();
            assert!(stats.converged && stats.relative_residual <= 1e-12);
            for (xi, ei) in x.iter().zip(&exact) {
                assert!((xi - ei).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace_1d(4);
        let mut x = vec![1.0; 4];
        let s = cg_solve(&a, &[0.0; 4], &mut x, &SolveOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn rejects_bad_input() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        let mut x = vec![0.0; 2];
        assert!(matches!(cg_solve(&a, &[1.0, 1.0], &mut x, &SolveOptions::default()), Err(Error::InvalidArgument(_))));
        let a = laplace_1d(3);
        assert!(cg_solve(&a, &[1.0; 2], &mut x, &SolveOptions::default()).is_err());
        let opts = SolveOptions { preconditioner: Preconditioner::BlockJacobi(2), ..Default::default() };
        let mut x = vec![0.0; 3];
        assert!(cg_solve(&a, &[1.0; 3], &mut x, &opts).is_err());
    }

    #[test]
    fn iteration_cap_reports_stats() {
        let a = laplace_1d(100);
        let mut x = vec![0.0; 100];
        let opts = SolveOptions { tol: 1e-14, max_iter: Some(3), preconditioner: Preconditioner::None };
        match cg_solve(&a, &vec![1.0; 100], &mut x, &opts) {
            Err(Error::NonConvergence(s)) => {
                assert_eq!(s.iterations, 3);
                assert!(!s.converged);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
