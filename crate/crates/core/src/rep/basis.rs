use std::collections::HashMap;

use serde::Serialize;

use super::spec::{BasisLabel, RepSpec, Step, Truncation};
use super::RepError;

/// Ordered truncated basis with interior bookkeeping.
#[derive(Debug, Clone)]
pub struct Basis {
    labels: Vec<BasisLabel>,
    ordinal: HashMap<BasisLabel, usize>,
    /// `interior[d - 1]`: labels closed under `d` applications of any
    /// generator or adjoint.
    interior: Vec<Vec<usize>>,
}

/// Depths precomputed at construction.
const STORED_DEPTH: usize = 2;

impl Basis {
    pub fn build(spec: &RepSpec, trunc: &Truncation) -> Result<Self, RepError> {
        let labels = spec.labels(trunc)?;
        if labels.is_empty() {
            return Err(RepError::InvalidTruncation("no basis labels".into()));
        }
        let ordinal = labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let mut basis = Basis {
            labels,
            ordinal,
            interior: Vec::new(),
        };
        let gens: Vec<u32> = (1..=spec.n()).collect();
        basis.interior = interior_sets(spec, &basis, &gens, STORED_DEPTH);
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &BasisLabel {
        &self.labels[i]
    }

    pub fn ordinal(&self, label: &BasisLabel) -> Option<usize> {
        self.ordinal.get(label).copied()
    }

    /// Stored interior set for depth 1 or 2.
    pub fn interior(&self, depth: usize) -> &[usize] {
        assert!(
            (1..=STORED_DEPTH).contains(&depth),
            "only depths 1..={STORED_DEPTH} are stored; use OperatorFamily::interior"
        );
        &self.interior[depth - 1]
    }

    pub fn export(&self) -> BasisExport<'_> {
        BasisExport {
            labels: &self.labels,
            interior_depth_1: &self.interior[0],
            interior_depth_2: &self.interior[1],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BasisExport<'a> {
    pub labels: &'a [BasisLabel],
    pub interior_depth_1: &'a [usize],
    pub interior_depth_2: &'a [usize],
}

/// Interior sets for depths `1..=max_depth` with respect to the generators
/// in `gens` (1-based) and their adjoints.
///
/// A label is interior at depth `d` when every product of at most `d`
/// such operators applied to it agrees with the untruncated action: each
/// intermediate image is either exactly zero or inside the window.
pub fn interior_sets(spec: &RepSpec, basis: &Basis, gens: &[u32], max_depth: usize) -> Vec<Vec<usize>> {
    // None: some image leaves the window.
    let targets: Vec<Option<Vec<usize>>> = basis
        .labels
        .iter()
        .map(|l| {
            let mut out = Vec::new();
            for &k in gens {
                for adjoint in [false, true] {
                    match spec.step(l, k, adjoint) {
                        Step::Zero => {}
                        Step::To(t, _) => out.push(basis.ordinal(&t)?),
                    }
                }
            }
            Some(out)
        })
        .collect();
    let mut prev = vec![true; basis.len()];
    let mut sets = Vec::with_capacity(max_depth);
    for _ in 0..max_depth {
        let cur: Vec<bool> = targets
            .iter()
            .map(|t| t.as_ref().is_some_and(|ts| ts.iter().all(|&i| prev[i])))
            .collect();
        sets.push((0..cur.len()).filter(|&i| cur[i]).collect());
        prev = cur;
    }
    sets
}
