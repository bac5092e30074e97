//! Spectral resolutions of diagonal number operators.

use serde::{Deserialize, Serialize};

use super::sparse::{SparseOperator, C64};

/// Default absolute tolerance for merging eigenvalues.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-9;

/// Real interval with independently open or closed ends. Infinite ends are
/// allowed (and then treated as open).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn point(a: f64) -> Self {
        Self::closed(a, a)
    }

    pub fn contains(&self, t: f64, slack: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo - slack } else { t > self.lo + slack };
        let below = if self.hi_closed { t <= self.hi + slack } else { t < self.hi - slack };
        above && below
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Finite union of intervals, with a membership slack that absorbs
/// rounding in eigenvalues sitting exactly on an endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<Interval>,
    pub slack: f64,
}

impl IntervalSet {
    pub fn new(intervals: Vec<Interval>) -> Self {
        IntervalSet { intervals, slack: DEFAULT_EIGEN_TOL }
    }

    pub fn single(i: Interval) -> Self {
        Self::new(vec![i])
    }

    pub fn all() -> Self {
        Self::single(Interval::open(f64::NEG_INFINITY, f64::INFINITY))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(t, self.slack))
    }

    pub fn is_bounded(&self) -> bool {
        self.intervals.iter().all(Interval::is_bounded)
    }

    /// Preimage under the increasing affine map `t ↦ a t + b` (`a > 0`):
    /// `{t : a t + b ∈ self}`. The slack is rescaled so membership of `t`
    /// in the preimage matches membership of `a t + b` in `self`.
    pub fn preimage_affine(&self, a: f64, b: f64) -> Self {
        assert!(a > 0.0, "preimage_affine needs an increasing map");
        let map = |t: f64| (t - b) / a;
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .map(|i| Interval { lo: map(i.lo), hi: map(i.hi), ..*i })
                .collect(),
            slack: self.slack / a,
        }
    }
}

/// Eigenvalue clusters of a diagonal operator; the clusters partition the
/// basis ordinals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResolution {
    pub dim: usize,
    pub clusters: Vec<(f64, Vec<usize>)>,
}

/// Groups the diagonal entries into clusters of values within `tol` of
/// their neighbours, in ascending order.
pub fn spectral_resolution(diag: &[f64], tol: f64) -> SpectralResolution {
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut last = f64::NAN;
    for i in order {
        let v = diag[i];
        match clusters.last_mut() {
            Some((_, members)) if (v - last).abs() <= tol => members.push(i),
            _ => clusters.push((v, vec![i])),
        }
        last = v;
    }
    for (rep, members) in &mut clusters {
        members.sort_unstable();
        *rep = members.iter().map(|&i| diag[i]).sum::<f64>() / members.len() as f64;
    }
    SpectralResolution { dim: diag.len(), clusters }
}

impl SpectralResolution {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.0).collect()
    }

    /// Orthogonal projection onto the labels whose eigenvalue lies in `delta`.
    pub fn apply_e(&self, delta: &IntervalSet) -> SparseOperator {
        let mut diag = vec![C64::new(0.0, 0.0); self.dim];
        for (value, members) in &self.clusters {
            if delta.contains(*value) {
                for &i in members {
                    diag[i] = C64::new(1.0, 0.0);
                }
            }
        }
        SparseOperator::from_diagonal(&diag)
    }

    /// Per-label indicator of `delta`, the diagonal of [`Self::apply_e`].
    pub fn indicator(&self, delta: &IntervalSet) -> Vec<bool> {
        let mut out = vec![false; self.dim];
        for (value, members) in &self.clusters {
            if delta.contains(*value) {
                for &i in members {
                    out[i] = true;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_partition_basis() {
        let d = [0.0, 1.5, 1.0, 1.5 + 1e-12, 0.0];
        let r = spectral_resolution(&d, DEFAULT_EIGEN_TOL);
        assert_eq!(r.clusters.len(), 3);
        assert_eq!(r.clusters[0].1, vec![0, 4]);
        assert_eq!(r.clusters[2].1, vec![1, 3]);
        let mut all: Vec<usize> = r.clusters.iter().flat_map(|c| c.1.clone()).collect();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn zero_diagonal_has_single_cluster() {
        let r = spectral_resolution(&[0.0; 4], DEFAULT_EIGEN_TOL);
        assert_eq!(r.clusters, vec![(0.0, vec![0, 1, 2, 3])]);
    }

    #[test]
    fn projections() {
        let r = spectral_resolution(&[0.0, 1.0, 1.5, 1.75], DEFAULT_EIGEN_TOL);
        assert_eq!(r.apply_e(&IntervalSet::all()), SparseOperator::identity(4));
        let p0 = r.apply_e(&IntervalSet::single(Interval::point(0.0)));
        assert_eq!(p0.diagonal()[0], C64::new(1.0, 0.0));
        assert_eq!(p0.nnz(), 1);
        let none = r.apply_e(&IntervalSet::single(Interval::open(2.0, 3.0)));
        assert_eq!(none.nnz(), 0);
        let two = r.apply_e(&IntervalSet::new(vec![Interval::open(0.5, 1.2), Interval::closed(1.7, 1.8)]));
        assert_eq!(two.nnz(), 2);
        // P^2 = P
        assert_eq!(two.matmul(&two).unwrap(), two);
    }

    #[test]
    fn open_and_closed_ends() {
        let i = Interval { lo: 1.0, hi: 2.0, lo_closed: false, hi_closed: true };
        assert!(!i.contains(1.0, 0.0));
        assert!(i.contains(2.0, 0.0));
        assert!(i.contains(1.5, 0.0));
    }

    #[test]
    fn preimage_matches_forward_membership() {
        let q = 0.5;
        let delta = IntervalSet::new(vec![Interval::closed(1.2, 1.6), Interval::open(1.8, 1.9)]);
        let pre = delta.preimage_affine(q, 1.0);
        for i in 0..200 {
            let t = -1.0 + i as f64 * 0.013;
            assert_eq!(pre.contains(t), delta.contains(1.0 + q * t), "t={t}");
        }
    }
}
