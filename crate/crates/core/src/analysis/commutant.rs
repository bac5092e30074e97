//! Dimension of the commutant of `{S_k, S_k^*, E_k(δ)}` on a truncation,
//! as a heuristic irreducibility signal.
//!
//! Commuting with every spectral projection of every `D_k^2` forces
//! `X_uv = 0` unless `u` and `v` carry the same eigenvalue for each `k`.
//! Commuting with the partial isometries gives equations `X_a ρ = X_b σ`
//! between single entries (the shifts have one entry per column), so the
//! solution space is read off a union-find over unknowns with phase
//! potentials. Equations that would need an entry outside the window are
//! dropped, which can only enlarge the count.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Status;
use crate::rep::{spectral_resolution, OperatorFamily, Step, C64, DEFAULT_EIGEN_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Img {
    /// Exactly zero in the untruncated representation.
    Zero,
    /// Nonzero, but the target label is outside the window.
    Outside,
    In(usize, C64),
}

/// Partial-isometry action and spectral signatures of one truncation or a
/// direct sum of several.
#[derive(Debug, Clone)]
pub struct CommutantInput {
    dim: usize,
    n: u32,
    fwd: Vec<Vec<Img>>,
    bwd: Vec<Vec<Img>>,
    signature: Vec<Vec<usize>>,
    interior: Vec<usize>,
}

impl CommutantInput {
    pub fn from_family(family: &OperatorFamily) -> Self {
        Self::direct_sum(&[family])
    }

    /// Direct sum of truncations with the same number of generators.
    pub fn direct_sum(families: &[&OperatorFamily]) -> Self {
        let n = families.first().map_or(0, |f| f.n());
        assert!(families.iter().all(|f| f.n() == n), "direct sum needs equal generator counts");
        let dim: usize = families.iter().map(|f| f.dim()).sum();
        let mut fwd = vec![Vec::with_capacity(dim); n as usize];
        let mut bwd = vec![Vec::with_capacity(dim); n as usize];
        let mut interior = Vec::new();
        let mut offset = 0;
        for f in families {
            let spec = f.spec();
            for k in 1..=n {
                for label in f.basis().labels() {
                    for (adjoint, out) in [(false, &mut fwd[k as usize - 1]), (true, &mut bwd[k as usize - 1])] {
                        out.push(match spec.step(label, k, adjoint) {
                            Step::Zero => Img::Zero,
                            Step::To(t, w) => match f.basis().ordinal(&t) {
                                Some(i) => Img::In(i + offset, w / w.norm()),
                                None => Img::Outside,
                            },
                        });
                    }
                }
            }
            interior.extend(f.interior(2).into_iter().map(|i| i + offset));
            offset += f.dim();
        }
        let signature_per_k: Vec<Vec<usize>> = (1..=n)
            .map(|k| {
                let d: Vec<f64> = families.iter().flat_map(|f| f.d_sq(k).iter().copied()).collect();
                let mut id = vec![0; dim];
                for (c, (_, members)) in spectral_resolution(&d, DEFAULT_EIGEN_TOL).clusters.iter().enumerate() {
                    for &m in members {
                        id[m] = c;
                    }
                }
                id
            })
            .collect();
        let signature = (0..dim).map(|v| signature_per_k.iter().map(|s| s[v]).collect()).collect();
        CommutantInput { dim, n, fwd, bwd, signature, interior }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutantReport {
    /// `None` when inconclusive.
    pub dimension: Option<usize>,
    pub status: Status,
    /// Always true: truncation breaks exact invariance.
    pub heuristic: bool,
    pub basis_size: usize,
    pub interior_size: usize,
    pub unknowns: usize,
    /// Free components over the whole window, including those touching
    /// only boundary labels.
    pub free_components: usize,
}

struct PhaseUnionFind {
    parent: Vec<usize>,
    /// `X_i = pot[i] * X_parent[i]`.
    pot: Vec<C64>,
    zero: Vec<bool>,
    tol: f64,
}

impl PhaseUnionFind {
    fn new(n: usize, tol: f64) -> Self {
        PhaseUnionFind { parent: (0..n).collect(), pot: vec![C64::new(1.0, 0.0); n], zero: vec![false; n], tol }
    }

    fn find(&mut self, i: usize) -> (usize, C64) {
        let p = self.parent[i];
        if p == i {
            return (i, C64::new(1.0, 0.0));
        }
        let (root, pp) = self.find(p);
        self.parent[i] = root;
        self.pot[i] *= pp;
        (root, self.pot[i])
    }

    /// Records `X_a = r X_b`.
    fn union(&mut self, a: usize, b: usize, r: C64) {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        let ratio = r * pb / pa;
        if ra == rb {
            if (ratio - 1.0).norm() > self.tol {
                self.zero[ra] = true;
            }
            return;
        }
        self.parent[ra] = rb;
        self.pot[ra] = ratio;
        self.zero[rb] |= self.zero[ra];
    }

    fn set_zero(&mut self, a: usize) {
        let (r, _) = self.find(a);
        self.zero[r] = true;
    }
}

/// Commutant dimension restricted to interior_depth_2 rows and columns.
///
/// Inconclusive when fewer than four interior vectors are available,
/// unless the whole space is interior.
pub fn commutant_dimension(input: &CommutantInput, tol: f64) -> CommutantReport {
    let dim = input.dim;
    let mut groups: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for v in 0..dim {
        groups.entry(input.signature[v].as_slice()).or_default().push(v);
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut group_list: Vec<&Vec<usize>> = groups.values().collect();
    group_list.sort();
    for g in group_list {
        for &u in g {
            for &v in g {
                index.insert((u, v), pairs.len());
                pairs.push((u, v));
            }
        }
    }
    let mut uf = PhaseUnionFind::new(pairs.len(), tol);

    // A term is `coef * X_pair`, or exactly zero; `None` drops the equation.
    let term = |u: usize, v: usize, coef: C64| index.get(&(u, v)).map(|&i| (i, coef));
    for k in 0..input.n as usize {
        for u in 0..dim {
            for v in 0..dim {
                // X S = S X at (u, v) and X S^* = S^* X at (u, v)
                let eqs = [
                    (input.fwd[k][v], input.bwd[k][u], false),
                    (input.bwd[k][v], input.fwd[k][u], true),
                ];
                for (right, left, _) in eqs {
                    let lhs = match right {
                        Img::Outside => continue,
                        Img::Zero => None,
                        Img::In(t, ph) => term(u, t, ph),
                    };
                    let rhs = match left {
                        Img::Outside => continue,
                        Img::Zero => None,
                        Img::In(s, ph) => term(s, v, ph.conj()),
                    };
                    match (lhs, rhs) {
                        (None, None) => {}
                        (Some((a, _)), None) | (None, Some((a, _))) => uf.set_zero(a),
                        (Some((a, ca)), Some((b, cb))) => uf.union(a, b, cb / ca),
                    }
                }
            }
        }
    }

    let mut inside = vec![false; dim];
    for &i in &input.interior {
        inside[i] = true;
    }
    let mut free_roots = Vec::new();
    let mut interior_roots = Vec::new();
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let (r, _) = uf.find(i);
        if uf.zero[r] {
            continue;
        }
        free_roots.push(r);
        if inside[u] && inside[v] {
            interior_roots.push(r);
        }
    }
    free_roots.sort_unstable();
    free_roots.dedup();
    interior_roots.sort_unstable();
    interior_roots.dedup();

    let conclusive = input.interior.len() >= 4 || input.interior.len() == dim;
    CommutantReport {
        dimension: conclusive.then_some(interior_roots.len()),
        status: if !conclusive {
            Status::Inconclusive
        } else if interior_roots.len() == 1 {
            Status::Pass
        } else {
            Status::Fail
        },
        heuristic: true,
        basis_size: dim,
        interior_size: input.interior.len(),
        unknowns: pairs.len(),
        free_components: free_roots.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{build_generators, RepSpec, SparseOperator, Truncation};
    use nalgebra::DMatrix;

    fn fam(spec: RepSpec, l: usize, lo: i64, hi: i64) -> OperatorFamily {
        build_generators(&spec, &Truncation::new(l, lo, hi)).unwrap()
    }

    #[test]
    fn circle_is_irreducible() {
        let r = commutant_dimension(&CommutantInput::from_family(&fam(RepSpec::Circle { q: 0.5, phi: 1.0 }, 0, 0, 0)), 1e-10);
        assert_eq!(r.dimension, Some(1));
        assert!(r.heuristic);
    }

    #[test]
    fn small_interior_is_inconclusive() {
        let f = fam(RepSpec::FockQ1 { q: 0.5 }, 0, 0, 3);
        let r = commutant_dimension(&CommutantInput::from_family(&f), 1e-10);
        assert_eq!(r.status, Status::Inconclusive);
        assert_eq!(r.dimension, None);
    }

    #[test]
    fn fock_is_irreducible() {
        let f = fam(RepSpec::FockQn { q: 0.5, n: 2 }, 4, 0, 0);
        assert_eq!(commutant_dimension(&CommutantInput::from_family(&f), 1e-10).dimension, Some(1));
    }

    #[test]
    fn two_copies_of_one_family_are_not() {
        let f = fam(RepSpec::FockQ1 { q: 0.5 }, 0, 0, 8);
        let r = commutant_dimension(&CommutantInput::direct_sum(&[&f, &f]), 1e-10);
        // a 2x2 matrix algebra: four free entries
        assert_eq!(r.dimension, Some(4));
    }

    /// Independent oracle: the nullity of the dense linear system
    /// `X S_k = S_k X`, `X S_k^* = S_k^* X`, `X E = E X` over all entries of
    /// `X`, for a truncation whose equations never leave the window.
    fn dense_commutant(ops: &[SparseOperator], projections: &[SparseOperator]) -> usize {
        let dim = ops[0].nrows();
        let mut rows: Vec<Vec<C64>> = Vec::new();
        let mut push_commutator = |m: &DMatrix<C64>| {
            for u in 0..dim {
                for v in 0..dim {
                    let mut row = vec![C64::new(0.0, 0.0); dim * dim];
                    for w in 0..dim {
                        row[u * dim + w] += m[(w, v)];
                        row[w * dim + v] -= m[(u, w)];
                    }
                    rows.push(row);
                }
            }
        };
        for op in ops.iter().chain(projections) {
            push_commutator(&op.to_dense());
            push_commutator(&op.adjoint().to_dense());
        }
        let a = DMatrix::from_fn(rows.len(), dim * dim, |r, c| rows[r][c]);
        let svd = a.svd(false, false);
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9).count();
        dim * dim - rank
    }

    #[test]
    fn matches_dense_oracle_on_closed_spaces() {
        // one-dimensional and two-copy circles are closed under every map
        let a = fam(RepSpec::Circle { q: 0.3, phi: 0.5 }, 0, 0, 0);
        let b = fam(RepSpec::Circle { q: 0.3, phi: 2.0 }, 0, 0, 0);
        for parts in [vec![&a], vec![&a, &a], vec![&a, &b]] {
            let input = CommutantInput::direct_sum(&parts);
            let gens = SparseOperator::direct_sum(&parts.iter().map(|f| f.isometry(1)).collect::<Vec<_>>());
            let mut projections = Vec::new();
            let d: Vec<f64> = parts.iter().flat_map(|f| f.d_sq(1).to_vec()).collect();
            let res = spectral_resolution(&d, 1e-9);
            for (value, _) in &res.clusters {
                projections.push(res.apply_e(&crate::rep::IntervalSet::single(crate::rep::Interval::point(*value))));
            }
            let want = dense_commutant(&[gens], &projections);
            assert_eq!(commutant_dimension(&input, 1e-10).free_components, want);
        }
    }
}
