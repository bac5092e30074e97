//! Column-compressed complex matrices.
//!
//! Generators of the representations are weighted shifts, so products stay
//! sparse and column-at-a-time storage is the natural layout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    Dimension {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("column {col} has {count} nonzero entries; weighted shifts allow at most one")]
    NotAShift { col: usize, count: usize },
}

/// Sparse complex matrix stored by columns. Each column keeps its entries
/// sorted by row with no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseOperator {
            rows,
            cols: vec![Vec::new(); cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let cols = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| if d == C64::new(0.0, 0.0) { vec![] } else { vec![(i, d)] })
            .collect();
        SparseOperator {
            rows: diag.len(),
            cols,
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self, SparseError> {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(SparseError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            m.add_to(r, c, v);
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols.len())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, c: usize) -> &[(usize, C64)] {
        &self.cols[c]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self.cols[c].binary_search_by_key(&r, |e| e.0) {
            Ok(pos) => self.cols[c][pos].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        let col = &mut self.cols[c];
        match col.binary_search_by_key(&r, |e| e.0) {
            Ok(pos) => {
                if v == C64::new(0.0, 0.0) {
                    col.remove(pos);
                } else {
                    col[pos].1 = v;
                }
            }
            Err(pos) => {
                if v != C64::new(0.0, 0.0) {
                    col.insert(pos, (r, v));
                }
            }
        }
    }

    fn add_to(&mut self, r: usize, c: usize, v: C64) {
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    /// Row-major triplets in deterministic order.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut t: Vec<(usize, usize, C64)> = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
            .collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        t
    }

    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.rows];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                cols[r].push((c, v.conj()));
            }
        }
        // columns were visited in increasing order, so rows are sorted
        SparseOperator {
            rows: self.cols.len(),
            cols,
        }
    }

    pub fn matmul(&self, rhs: &SparseOperator) -> Result<Self, SparseError> {
        if self.ncols() != rhs.nrows() {
            return Err(SparseError::Dimension {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.ncols());
        let mut acc: std::collections::BTreeMap<usize, C64> = Default::default();
        for (c, rcol) in rhs.cols.iter().enumerate() {
            acc.clear();
            for &(k, b) in rcol {
                for &(r, a) in &self.cols[k] {
                    *acc.entry(r).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
            out.cols[c] = acc
                .iter()
                .filter(|(_, v)| **v != C64::new(0.0, 0.0))
                .map(|(&r, &v)| (r, v))
                .collect();
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &SparseOperator) -> Result<Self, SparseError> {
        self.axpy(C64::new(1.0, 0.0), rhs)
    }

    pub fn sub(&self, rhs: &SparseOperator) -> Result<Self, SparseError> {
        self.axpy(C64::new(-1.0, 0.0), rhs)
    }

    /// `self + alpha * rhs`.
    pub fn axpy(&self, alpha: C64, rhs: &SparseOperator) -> Result<Self, SparseError> {
        if self.shape() != rhs.shape() {
            return Err(SparseError::Dimension {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = self.clone();
        for (c, col) in rhs.cols.iter().enumerate() {
            for &(r, v) in col {
                out.add_to(r, c, alpha * v);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        for col in &mut out.cols {
            for e in col.iter_mut() {
                e.1 *= alpha;
            }
            col.retain(|e| e.1 != C64::new(0.0, 0.0));
        }
        out
    }

    /// Euclidean norm of column `c`, i.e. `‖M e_c‖`.
    pub fn column_norm(&self, c: usize) -> f64 {
        self.cols[c].iter().fold(0.0, |acc, e| acc + e.1.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.cols
            .iter()
            .flatten()
            .map(|e| e.1.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.cols
            .iter()
            .enumerate()
            .all(|(c, col)| col.iter().all(|&(r, _)| r == c))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.ncols())).map(|i| self.get(i, i)).collect()
    }

    /// Weighted-shift check: every column has at most one nonzero entry.
    pub fn check_shift(&self) -> Result<(), SparseError> {
        for (c, col) in self.cols.iter().enumerate() {
            if col.len() > 1 {
                return Err(SparseError::NotAShift {
                    col: c,
                    count: col.len(),
                });
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.rows);
        for (c, col) in self.cols.iter().enumerate() {
            let x = v[c];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for &(r, a) in col {
                out[r] += a * x;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.ncols());
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for c in 0..m.ncols() {
            out.cols[c] = (0..m.nrows())
                .filter(|&r| m[(r, c)] != C64::new(0.0, 0.0))
                .map(|r| (r, m[(r, c)]))
                .collect();
        }
        out
    }

    /// `P M P^T` for the permutation sending basis index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows);
        assert_eq!(perm.len(), self.ncols());
        let t = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (perm[r], perm[c], v));
        Self::from_triplets(self.rows, self.rows, t).expect("permutation stays in bounds")
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(parts: &[&SparseOperator]) -> Self {
        let rows: usize = parts.iter().map(|p| p.nrows()).sum();
        let cols: usize = parts.iter().map(|p| p.ncols()).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for p in parts {
            for (c, col) in p.cols.iter().enumerate() {
                out.cols[c0 + c] = col.iter().map(|&(r, v)| (r0 + r, v)).collect();
            }
            r0 += p.nrows();
            c0 += p.ncols();
        }
        out
    }

    /// Restriction to the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.rows];
        for (i, &r) in rows.iter().enumerate() {
            pos[r] = i;
        }
        let mut out = Self::zeros(rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            let mut col: Vec<(usize, C64)> = self.cols[c]
                .iter()
                .filter(|e| pos[e.0] != usize::MAX)
                .map(|&(r, v)| (pos[r], v))
                .collect();
            col.sort_by_key(|e| e.0);
            out.cols[j] = col;
        }
        out
    }

    pub fn to_coo(&self) -> CooMatrix {
        CooMatrix {
            rows: self.rows,
            cols: self.ncols(),
            entries: self
                .triplets()
                .into_iter()
                .map(|(r, c, v)| CooEntry(r, c, v.re, v.im))
                .collect(),
        }
    }
}

/// Coordinate-list interchange format `{rows, cols, entries: [[i, j, re, im]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<CooEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CooEntry(pub usize, pub usize, pub f64, pub f64);

impl TryFrom<&CooMatrix> for SparseOperator {
    type Error = SparseError;

    fn try_from(m: &CooMatrix) -> Result<Self, Self::Error> {
        SparseOperator::from_triplets(
            m.rows,
            m.cols,
            m.entries
                .iter()
                .map(|e| (e.0, e.1, C64::new(e.2, e.3))),
        )
    }
}
