use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dense::{hermitian_eigen, null_space, OrthoSet, SVec};
use super::AnalysisError;
use crate::classify::normalize_x;
use crate::rep::{SparseOperator, C64};

/// Chain generated from one vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockBlock {
    /// Ordinal carrying the largest component of the vacuum vector.
    pub vacuum: usize,
    pub chain_length: usize,
    pub ordinals: Vec<usize>,
}

/// Eigenspace of `A^*A` at `1/(1-q)`, where the polar part is unitary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryBlock {
    pub present: bool,
    pub ordinals: Vec<usize>,
    /// For a one-dimensional block, the argument of `A` on it in `[0, 2π)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

/// One orbit of `t ↦ 1 + q t` above `1/(1-q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundedBlock {
    pub ordinals: Vec<usize>,
    /// Orbit representative in the fundamental domain.
    pub x: f64,
    /// Orbit steps from `x` to the member it was read from.
    pub shift: i64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoldDecomposition {
    pub dim: usize,
    pub q: f64,
    pub x0: f64,
    pub fock_blocks: Vec<FockBlock>,
    pub unitary_block: UnitaryBlock,
    pub unbounded_blocks: Vec<UnboundedBlock>,
    /// Truncation-boundary vectors that no block absorbed.
    pub boundary: Vec<usize>,
    /// Relation residual on the flagged interior.
    pub residual: f64,
}

impl WoldDecomposition {
    /// Block ordinal lists in the order Fock blocks, unitary block,
    /// unbounded blocks, boundary.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.fock_blocks.iter().map(|b| b.ordinals.clone()).collect();
        if self.unitary_block.present {
            out.push(self.unitary_block.ordinals.clone());
        }
        out.extend(self.unbounded_blocks.iter().map(|b| b.ordinals.clone()));
        if !self.boundary.is_empty() {
            out.push(self.boundary.clone());
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Fock(usize),
    Unitary,
    Orbit(usize),
}

/// q-Wold decomposition of a single operator `A` satisfying
/// `A^*A = 1 + q AA^*` on the flagged `interior` ordinals.
///
/// Vacua are the kernel of `A^*` inside the interior span. Each vacuum
/// generates a Fock chain, which stops after the first vector that leaves
/// the interior or once re-orthogonalization leaves a norm below `tol`. On
/// the orthogonal complement `A^*A` is diagonalized: eigenvalues within
/// `tol (1 + λ)` of `1/(1-q)` form the unitary block, eigenvalues above it
/// are grouped into orbits of `t ↦ 1 + qt` (at most 64 steps). Remaining
/// vectors off the interior are boundary effects and are attached to a block
/// they are linked to by `A` or `A^*`; remaining interior vectors are an
/// error.
pub fn q_wold(a: &SparseOperator, interior: &[usize], q: f64, tol: f64, x0: f64) -> Result<WoldDecomposition, AnalysisError> {
    let (dim, cols) = a.shape();
    if dim != cols {
        return Err(AnalysisError::NotSquare(dim, cols));
    }
    let mut inside = vec![false; dim];
    for &i in interior {
        *inside.get_mut(i).ok_or(AnalysisError::BadInterior(i))? = true;
    }
    let a_adj = a.adjoint();
    let c_sq = a_adj.matmul(a).expect("square");
    let d_sq = a.matmul(&a_adj).expect("square");
    let rel = c_sq
        .sub(&SparseOperator::identity(dim))
        .and_then(|m| m.axpy(C64::new(-q, 0.0), &d_sq))
        .expect("square");
    let residual = interior
        .iter()
        .map(|&v| rel.column_norm(v) / c_sq.column_norm(v).max(1.0))
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(AnalysisError::RejectInput { residual, tol });
    }
    let limit = 1.0 / (1.0 - q);

    let mut blocks = OrthoSet::new(dim);
    let mut owner: Vec<Kind> = Vec::new();
    let mut fock_meta: Vec<(usize, usize)> = Vec::new();

    for vac in vacua(&a_adj, interior, &inside, tol) {
        let Some(first) = blocks.reduce(&vac, tol) else { continue };
        let id = fock_meta.len();
        let vacuum = first.argmax().unwrap_or(0);
        let mut cur = first;
        let mut len = 0;
        loop {
            let leaves = cur.weight_outside(&inside) > tol;
            let next = SVec::apply(a, &cur);
            blocks.push(cur);
            owner.push(Kind::Fock(id));
            len += 1;
            if leaves || len >= dim {
                break;
            }
            match blocks.reduce(&next, tol) {
                Some(v) if next.norm() > tol => cur = v,
                _ => break,
            }
        }
        fock_meta.push((vacuum, len));
    }

    // orthonormal complement of the chains, in coordinate order
    let mut complement = OrthoSet::new(dim);
    for i in 0..dim {
        let Some(v) = blocks.reduce(&SVec::unit(i), 1e-8) else { continue };
        if let Some(v) = complement.reduce(&v, 1e-8) {
            complement.push(v);
        }
    }
    let r = complement.len();
    let mut m = DMatrix::<C64>::zeros(r, r);
    for (b, vb) in complement.vecs.iter().enumerate() {
        let img = SVec::apply(&c_sq, vb);
        for (a_i, va) in complement.vecs.iter().enumerate() {
            m[(a_i, b)] = va.dot(&img);
        }
    }
    let (vals, vecs) = hermitian_eigen(&m);
    let eig: Vec<(f64, SVec)> = (0..r)
        .map(|c| {
            let mut acc = SVec::default();
            for (a_i, va) in complement.vecs.iter().enumerate() {
                let coef = vecs[(a_i, c)];
                if coef.norm() > 0.0 {
                    acc = acc.sub_scaled(-coef, va);
                }
            }
            (vals[c], acc)
        })
        .collect();

    let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs());
    let is_interior = |v: &SVec| v.weight_outside(&inside) <= tol;
    let mut unitary: Vec<usize> = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();
    let mut rest: Vec<usize> = Vec::new();
    for (i, (lambda, _)) in eig.iter().enumerate() {
        if close(*lambda, limit) {
            unitary.push(i);
        } else if *lambda > limit {
            candidates.push(i);
        } else {
            rest.push(i);
        }
    }

    // orbits of t -> 1 + q t, which contracts towards the limit from above
    let mut parent: Vec<usize> = (0..candidates.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for x in 0..candidates.len() {
        for y in 0..candidates.len() {
            let (hi, lo) = (eig[candidates[x]].0, eig[candidates[y]].0);
            if x == y || hi < lo {
                continue;
            }
            if close(hi, lo) {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                parent[rx] = ry;
                continue;
            }
            let mut t = hi;
            for _ in 0..64 {
                t = 1.0 + q * t;
                if close(t, lo) {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    parent[rx] = ry;
                    break;
                }
                if t < lo - tol * (1.0 + lo) {
                    break;
                }
            }
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut root_index: Vec<Option<usize>> = vec![None; candidates.len()];
    for (x, &c) in candidates.iter().enumerate() {
        let root = find(&mut parent, x);
        let slot = *root_index[root].get_or_insert_with(|| {
            orbits.push(Vec::new());
            orbits.len() - 1
        });
        orbits[slot].push(c);
    }
    // an orbit seen only on boundary vectors is a truncation artifact
    let (orbits, stray): (Vec<_>, Vec<_>) = orbits.into_iter().partition(|o| o.iter().any(|&i| is_interior(&eig[i].1)));
    rest.extend(stray.into_iter().flatten());

    for &i in &unitary {
        blocks.push(eig[i].1.clone());
        owner.push(Kind::Unitary);
    }
    for (o, members) in orbits.iter().enumerate() {
        for &i in members {
            blocks.push(eig[i].1.clone());
            owner.push(Kind::Orbit(o));
        }
    }

    // boundary vectors linked to a block by A or A^* join it
    let mut pending: Vec<usize> = rest;
    loop {
        let mut changed = false;
        let mut still = Vec::new();
        for i in pending {
            let v = &eig[i].1;
            let links = [SVec::apply(a, v), SVec::apply(&a_adj, v)];
            let hit = (0..blocks.len()).find(|&b| links.iter().any(|l| blocks.vecs[b].dot(l).norm() > tol));
            match hit {
                Some(b) => {
                    let kind = owner[b];
                    blocks.push(v.clone());
                    owner.push(kind);
                    changed = true;
                }
                None => still.push(i),
            }
        }
        pending = still;
        if !changed {
            break;
        }
    }
    let unclassified: Vec<f64> = pending.iter().filter(|&&i| is_interior(&eig[i].1)).map(|&i| eig[i].0).collect();
    if !unclassified.is_empty() {
        return Err(AnalysisError::UnclassifiedRemainder { eigenvalues: unclassified });
    }

    let support = |pred: &dyn Fn(&Kind) -> bool| -> Vec<usize> {
        let mut w = vec![0.0; dim];
        for (v, k) in blocks.vecs.iter().zip(&owner) {
            if pred(k) {
                for &(i, x) in &v.0 {
                    w[i] += x.norm_sqr();
                }
            }
        }
        (0..dim).filter(|&i| w[i] > 0.5).collect()
    };

    let fock_blocks: Vec<FockBlock> = fock_meta
        .iter()
        .enumerate()
        .map(|(id, &(vacuum, chain_length))| FockBlock {
            vacuum,
            chain_length,
            ordinals: support(&|k| matches!(k, Kind::Fock(i) if *i == id)),
        })
        .collect();

    let unitary_vecs: Vec<&SVec> = blocks.vecs.iter().zip(&owner).filter(|(_, k)| matches!(k, Kind::Unitary)).map(|(v, _)| v).collect();
    let phase = match unitary_vecs.as_slice() {
        [u] => {
            let z = u.dot(&SVec::apply(a, u));
            Some(z.arg().rem_euclid(std::f64::consts::TAU))
        }
        _ => None,
    };
    let unitary_block = UnitaryBlock {
        present: !unitary_vecs.is_empty(),
        ordinals: support(&|k| matches!(k, Kind::Unitary)),
        phase,
    };

    let mut unbounded_blocks = Vec::with_capacity(orbits.len());
    for (o, members) in orbits.iter().enumerate() {
        let mut eigenvalues: Vec<f64> = members.iter().map(|&i| eig[i].0).collect();
        eigenvalues.sort_by(f64::total_cmp);
        let best = members
            .iter()
            .filter(|&&i| is_interior(&eig[i].1))
            .map(|&i| normalize_x(eig[i].0, q, x0))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .min_by_key(|p| p.shift.abs())
            .expect("orbit has an interior member");
        unbounded_blocks.push(UnboundedBlock {
            ordinals: support(&|k| matches!(k, Kind::Orbit(i) if *i == o)),
            x: best.x,
            shift: best.shift,
            eigenvalues,
        });
    }

    let mut covered = vec![false; dim];
    for b in fock_blocks_iter(&fock_blocks)
        .chain(&unitary_block.ordinals)
        .chain(unbounded_blocks.iter().flat_map(|b| b.ordinals.iter()))
    {
        covered[*b] = true;
    }
    let boundary: Vec<usize> = (0..dim).filter(|&i| !covered[i]).collect();

    Ok(WoldDecomposition {
        dim,
        q,
        x0,
        fock_blocks,
        unitary_block,
        unbounded_blocks,
        boundary,
        residual,
    })
}

fn fock_blocks_iter(blocks: &[FockBlock]) -> impl Iterator<Item = &usize> {
    blocks.iter().flat_map(|b| b.ordinals.iter())
}

/// Kernel of `A^*` restricted to the interior span. When the nonzero
/// interior columns of `A^*` have disjoint supports they are independent and
/// the kernel is spanned by the zero columns; otherwise a dense SVD decides.
fn vacua(a_adj: &SparseOperator, interior: &[usize], inside: &[bool], tol: f64) -> Vec<SVec> {
    let mut zero = Vec::new();
    let mut used_rows = vec![false; a_adj.nrows()];
    let mut disjoint = true;
    for &c in interior {
        let col = a_adj.column(c);
        if col.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt() <= tol {
            zero.push(SVec::unit(c));
            continue;
        }
        for &(r, _) in col {
            if std::mem::replace(&mut used_rows[r], true) {
                disjoint = false;
            }
        }
    }
    if disjoint {
        return zero;
    }
    let b = DMatrix::from_fn(a_adj.nrows(), interior.len(), |r, c| a_adj.get(r, interior[c]));
    null_space(&b, tol)
        .into_iter()
        .map(|v| {
            let mut s = SVec::default();
            for (c, &x) in v.iter().enumerate() {
                if x.norm() > 1e-15 {
                    s.0.push((interior[c], x));
                }
            }
            s.0.sort_by_key(|e| e.0);
            debug_assert!(s.0.iter().all(|(i, _)| inside[*i]));
            s
        })
        .collect()
}
