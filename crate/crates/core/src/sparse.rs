//! Compressed-row sparse matrices and direct solvers.
//!
//! Assembly, products and restrictions are done on [`SparseMatrix`]; the
//! factorizations are delegated to `faer` (sequential build, so repeated runs
//! are bitwise reproducible). Every solve checks its relative residual and
//! applies a few steps of iterative refinement before giving up.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

use crate::error::SparseError;

/// Default relative residual accepted from a direct solve.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_REFINEMENT_STEPS: usize = 4;

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Adds `scale * m` with its rows and columns shifted by the given offsets.
    pub fn push_block(&mut self, row_offset: usize, col_offset: usize, scale: f64, m: &SparseMatrix) {
        for i in 0..m.nrows {
            for (j, v) in m.row(i) {
                self.entries.push((row_offset + i, col_offset + j, scale * v));
            }
        }
    }

    pub fn build(self) -> Result<SparseMatrix, SparseError> {
        SparseMatrix::from_triplets(&self.entries, self.nrows, self.ncols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicates; columns within a row come out strictly increasing.
    pub fn from_triplets(entries: &[(usize, usize, f64)], nrows: usize, ncols: usize) -> Result<Self, SparseError> {
        if let Some(&(row, col, _)) = entries.iter().find(|(r, c, _)| *r >= nrows || *c >= ncols) {
            return Err(SparseError::IndexOutOfRange { row, col, nrows, ncols });
        }
        // counting sort by row keeps the original order within a row, then a
        // stable sort by column makes the duplicate summation order deterministic
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in entries {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); entries.len()];
        for &(r, c, v) in entries {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        for i in 0..nrows {
            let row = &mut by_row[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                col_indices.push(c);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self { nrows, ncols, row_offsets, col_indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_offsets: vec![0; nrows + 1], col_indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, row_offsets: (0..=n).collect(), col_indices: (0..n).collect(), values: vec![1.0; n] }
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.ncols {
            return Err(SparseError::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        Ok(self.apply(x))
    }

    /// `A x`, panicking on a dimension mismatch.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "spmv dimension mismatch");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y += scale * A x`
    pub fn apply_add(&self, scale: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi += scale * s;
        }
    }

    /// `A^T x`
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        (0..self.nrows).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            entries.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        Self::from_triplets(&entries, self.ncols, self.nrows).expect("transpose indices in range")
    }

    /// Rows `rows` and columns `cols` of `self`, renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut entries = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_map[j] != usize::MAX {
                    entries.push((ri, col_map[j], v));
                }
            }
        }
        Self::from_triplets(&entries, rows.len(), cols.len()).expect("submatrix indices in range")
    }

    /// `sum_k c_k A_k`; all terms must share one shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<Self, SparseError> {
        let (nrows, ncols) = terms.first().map(|(_, m)| (m.nrows, m.ncols)).unwrap_or((0, 0));
        let mut t = Triplets::new(nrows, ncols);
        for (c, m) in terms {
            if m.nrows != nrows || m.ncols != ncols {
                return Err(SparseError::DimensionMismatch { expected: nrows, got: m.nrows });
            }
            t.push_block(0, 0, *c, m);
        }
        t.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest stored magnitude.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, SparseError> {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            trip.extend(self.row(i).map(|(j, v)| Triplet::new(i, j, v)));
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| SparseError::Factorization(format!("{e:?}")))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

enum Factor {
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
}

/// A factorized square matrix, reusable for many right-hand sides.
pub struct Factorization {
    matrix: SparseMatrix,
    factor: Factor,
    tol: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.factor {
            Factor::Lu(_) => "lu",
            Factor::Llt(_) => "cholesky",
        };
        f.debug_struct("Factorization").field("kind", &kind).field("n", &self.matrix.nrows).finish()
    }
}

impl Factorization {
    /// Sparse LU with partial pivoting, for general nonsingular matrices.
    pub fn lu(matrix: SparseMatrix, tol: f64) -> Result<Self, SparseError> {
        check_square(&matrix)?;
        let lu = matrix.to_faer()?.sp_lu().map_err(|e| SparseError::Factorization(format!("{e:?}")))?;
        Ok(Self { matrix, factor: Factor::Lu(lu), tol })
    }

    /// Sparse Cholesky; fails if the matrix is not numerically positive definite.
    pub fn cholesky(matrix: SparseMatrix, tol: f64) -> Result<Self, SparseError> {
        check_square(&matrix)?;
        let llt =
            matrix.to_faer()?.sp_cholesky(Side::Lower).map_err(|e| SparseError::Factorization(format!("{e:?}")))?;
        Ok(Self { matrix, factor: Factor::Llt(llt), tol })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = match &self.factor {
            Factor::Lu(lu) => lu.solve(&rhs),
            Factor::Llt(llt) => llt.solve(&rhs),
        };
        (0..b.len()).map(|i| x[i]).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let n = self.matrix.nrows;
        if b.len() != n {
            return Err(SparseError::DimensionMismatch { expected: n, got: b.len() });
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = self.raw_solve(b);
        let mut achieved = f64::INFINITY;
        for step in 0..=MAX_REFINEMENT_STEPS {
            let mut r = b.to_vec();
            self.matrix.apply_add(-1.0, &x, &mut r);
            let rel = norm2(&r) / bnorm;
            if !rel.is_finite() {
                return Err(SparseError::Factorization("non-finite solution".into()));
            }
            achieved = achieved.min(rel);
            // one refinement pass is always taken: it is cheap next to the
            // factorization and tightens energy balances well below `tol`
            if (rel <= self.tol && step > 0) || step == MAX_REFINEMENT_STEPS {
                break;
            }
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        if achieved <= self.tol {
            Ok(x)
        } else {
            Err(SparseError::ResidualTooLarge { achieved, tol: self.tol })
        }
    }
}

fn check_square(m: &SparseMatrix) -> Result<(), SparseError> {
    if m.nrows != m.ncols {
        return Err(SparseError::DimensionMismatch { expected: m.nrows, got: m.ncols });
    }
    Ok(())
}

/// Solves an SPD system by sparse Cholesky.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, SparseError> {
    Factorization::cholesky(a.clone(), tol)?.solve(b)
}

/// Solves a general nonsingular system by sparse LU.
pub fn solve_general(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, SparseError> {
    Factorization::lu(a.clone(), tol)?.solve(b)
}
