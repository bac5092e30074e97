//! Small linear-algebra helpers: sparse vectors with an indexed
//! Gram-Schmidt, and dense Hermitian eigen/null-space routines.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::rep::{SparseOperator, C64};

/// Sparse vector, entries sorted by index, no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct SVec(pub Vec<(usize, C64)>);

const DROP: f64 = 1e-15;

impl SVec {
    pub fn unit(i: usize) -> Self {
        SVec(vec![(i, C64::new(1.0, 0.0))])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, (_, x)| acc + x.norm_sqr()).sqrt()
    }

    pub fn scale(&mut self, a: C64) {
        for (_, x) in &mut self.0 {
            *x *= a;
        }
    }

    #[cfg(test)]
    pub fn get(&self, i: usize) -> C64 {
        match self.0.binary_search_by_key(&i, |e| e.0) {
            Ok(p) => self.0[p].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &SVec) -> C64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = C64::new(0.0, 0.0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.0[i].1.conj() * other.0[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `self - a * other`.
    pub fn sub_scaled(&self, a: C64, other: &SVec) -> SVec {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let ki = self.0.get(i).map_or(usize::MAX, |e| e.0);
            let kj = other.0.get(j).map_or(usize::MAX, |e| e.0);
            let (k, v) = if ki < kj {
                i += 1;
                (ki, self.0[i - 1].1)
            } else if kj < ki {
                j += 1;
                (kj, -a * other.0[j - 1].1)
            } else {
                i += 1;
                j += 1;
                (ki, self.0[i - 1].1 - a * other.0[j - 1].1)
            };
            if v.norm() > DROP {
                out.push((k, v));
            }
        }
        SVec(out)
    }

    pub fn apply(op: &SparseOperator, v: &SVec) -> SVec {
        let mut acc: std::collections::BTreeMap<usize, C64> = Default::default();
        for &(c, x) in &v.0 {
            for &(r, w) in op.column(c) {
                *acc.entry(r).or_insert(C64::new(0.0, 0.0)) += w * x;
            }
        }
        SVec(acc.into_iter().filter(|(_, x)| x.norm() > DROP).collect())
    }

    /// Squared weight on indices where `inside` is false.
    pub fn weight_outside(&self, inside: &[bool]) -> f64 {
        self.0.iter().filter(|(i, _)| !inside[*i]).map(|(_, x)| x.norm_sqr()).sum()
    }

    pub fn argmax(&self) -> Option<usize> {
        self.0.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|e| e.0)
    }
}

/// Orthonormal set with an index from coordinates to the vectors touching
/// them, so orthogonalizing a sparse vector only visits overlapping ones.
#[derive(Debug, Clone, Default)]
pub(crate) struct OrthoSet {
    pub vecs: Vec<SVec>,
    by_row: Vec<Vec<usize>>,
}

impl OrthoSet {
    pub fn new(dim: usize) -> Self {
        OrthoSet { vecs: Vec::new(), by_row: vec![Vec::new(); dim] }
    }

    fn project_out(&self, v: &SVec) -> SVec {
        let mut touching: Vec<usize> = v.0.iter().flat_map(|(i, _)| self.by_row[*i].iter().copied()).collect();
        touching.sort_unstable();
        touching.dedup();
        let mut out = v.clone();
        for b in touching {
            let c = self.vecs[b].dot(&out);
            if c.norm() > 0.0 {
                out = out.sub_scaled(c, &self.vecs[b]);
            }
        }
        out
    }

    /// Orthogonalizes twice against the set; returns the normalized
    /// remainder, or `None` if its norm is at most `tol` times the input's.
    pub fn reduce(&self, v: &SVec, tol: f64) -> Option<SVec> {
        let n0 = v.norm();
        if n0 == 0.0 {
            return None;
        }
        let mut out = self.project_out(&self.project_out(v));
        let n = out.norm();
        if n <= tol * n0 {
            return None;
        }
        out.scale(C64::new(1.0 / n, 0.0));
        Some(out)
    }

    pub fn push(&mut self, v: SVec) -> usize {
        let id = self.vecs.len();
        for (i, _) in &v.0 {
            self.by_row[*i].push(id);
        }
        self.vecs.push(v);
        id
    }

    pub fn len(&self) -> usize {
        self.vecs.len()
    }
}

/// Eigen-decomposition of a Hermitian matrix, ascending. Exactly diagonal
/// input is returned in the coordinate basis without rotating degenerate
/// eigenspaces.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let diagonal = (0..n).all(|c| (0..n).all(|r| r == c || m[(r, c)] == C64::new(0.0, 0.0)));
    let (vals, vecs) = if diagonal {
        ((0..n).map(|i| m[(i, i)].re).collect::<Vec<_>>(), DMatrix::<C64>::identity(n, n))
    } else {
        let e = SymmetricEigen::new(m.clone());
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

/// Orthonormal basis of `{x : B x ≈ 0}` from singular values at most `tol`
/// (relative to the largest).
pub(crate) fn null_space(b: &DMatrix<C64>, tol: f64) -> Vec<DVector<C64>> {
    let cols = b.ncols();
    if cols == 0 {
        return Vec::new();
    }
    // pad to at least as many rows as columns so V is square
    let padded = if b.nrows() < cols {
        let mut p = DMatrix::<C64>::zeros(cols, cols);
        p.view_mut((0, 0), (b.nrows(), cols)).copy_from(b);
        p
    } else {
        b.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let scale = svd.singular_values.iter().copied().fold(1.0f64, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * scale)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}
