use serde::{Deserialize, Serialize};

use super::basis::{interior_sets, Basis};
use super::sparse::{CooMatrix, SparseError, SparseOperator, C64};
use super::spec::{BasisLabel, RepSpec, Step, Truncation};
use super::spectral::{spectral_resolution, SpectralResolution, DEFAULT_EIGEN_TOL};
use super::RepError;

/// The generators of one truncated representation together with their
/// polar parts, number operators and spectral resolutions.
///
/// Generator indices in the public API are 1-based, matching the letters
/// of the words.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    spec: RepSpec,
    trunc: Truncation,
    basis: Basis,
    generators: Vec<SparseOperator>,
    adjoints: Vec<SparseOperator>,
    isometries: Vec<SparseOperator>,
    c_sq: Vec<Vec<f64>>,
    d_sq: Vec<Vec<f64>>,
    resolutions: Vec<SpectralResolution>,
}

pub fn build_basis(spec: &RepSpec, trunc: &Truncation) -> Result<Basis, RepError> {
    Basis::build(spec, trunc)
}

pub fn build_generators(spec: &RepSpec, trunc: &Truncation) -> Result<OperatorFamily, RepError> {
    OperatorFamily::build(spec, trunc, DEFAULT_EIGEN_TOL)
}

/// Replaces every nonzero weight of a weighted shift by its phase.
pub fn polar_isometry(a: &SparseOperator) -> Result<SparseOperator, SparseError> {
    a.check_shift()?;
    let triplets = a.triplets().into_iter().map(|(r, c, v)| (r, c, v / v.norm()));
    SparseOperator::from_triplets(a.nrows(), a.ncols(), triplets)
}

/// Diagonals of `C_k^2 = A_k^* A_k` and `D_k^2 = A_k A_k^*`, one vector per
/// generator.
pub fn number_operators(family: &OperatorFamily) -> (&[Vec<f64>], &[Vec<f64>]) {
    (&family.c_sq, &family.d_sq)
}

impl OperatorFamily {
    pub fn build(spec: &RepSpec, trunc: &Truncation, eigen_tol: f64) -> Result<Self, RepError> {
        let basis = Basis::build(spec, trunc)?;
        let dim = basis.len();
        let n = spec.n();
        let mut generators = Vec::with_capacity(n as usize);
        let mut c_sq = Vec::with_capacity(n as usize);
        let mut d_sq = Vec::with_capacity(n as usize);
        for k in 1..=n {
            let mut triplets = Vec::new();
            let mut cs = vec![0.0; dim];
            let mut ds = vec![0.0; dim];
            for (col, label) in basis.labels().iter().enumerate() {
                // C^2 e = A^* A e and D^2 e = A A^* e through the untruncated
                // action; both are diagonal because the action is injective.
                if let Step::To(t, w) = spec.step(label, k, false) {
                    if let Some(row) = basis.ordinal(&t) {
                        triplets.push((row, col, w));
                    }
                    cs[col] = (return_weight(spec, &t, k, true, label) * w).re;
                }
                if let Step::To(t, w) = spec.step(label, k, true) {
                    ds[col] = (return_weight(spec, &t, k, false, label) * w).re;
                }
            }
            generators.push(SparseOperator::from_triplets(dim, dim, triplets)?);
            c_sq.push(cs);
            d_sq.push(ds);
        }
        Self::assemble(*spec, *trunc, basis, generators, c_sq, d_sq, eigen_tol)
    }

    fn assemble(
        spec: RepSpec,
        trunc: Truncation,
        basis: Basis,
        generators: Vec<SparseOperator>,
        c_sq: Vec<Vec<f64>>,
        d_sq: Vec<Vec<f64>>,
        eigen_tol: f64,
    ) -> Result<Self, RepError> {
        let adjoints = generators.iter().map(SparseOperator::adjoint).collect();
        let isometries = generators
            .iter()
            .map(polar_isometry)
            .collect::<Result<Vec<_>, _>>()?;
        let resolutions = d_sq.iter().map(|d| spectral_resolution(d, eigen_tol)).collect();
        Ok(OperatorFamily {
            spec,
            trunc,
            basis,
            generators,
            adjoints,
            isometries,
            c_sq,
            d_sq,
            resolutions,
        })
    }

    pub fn spec(&self) -> &RepSpec {
        &self.spec
    }

    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> u32 {
        self.spec.n()
    }

    pub fn q(&self) -> f64 {
        self.spec.q()
    }

    pub fn generator(&self, k: u32) -> &SparseOperator {
        &self.generators[k as usize - 1]
    }

    pub fn adjoint(&self, k: u32) -> &SparseOperator {
        &self.adjoints[k as usize - 1]
    }

    pub fn isometry(&self, k: u32) -> &SparseOperator {
        &self.isometries[k as usize - 1]
    }

    pub fn c_sq(&self, k: u32) -> &[f64] {
        &self.c_sq[k as usize - 1]
    }

    pub fn d_sq(&self, k: u32) -> &[f64] {
        &self.d_sq[k as usize - 1]
    }

    pub fn resolution(&self, k: u32) -> &SpectralResolution {
        &self.resolutions[k as usize - 1]
    }

    pub fn generators(&self) -> &[SparseOperator] {
        &self.generators
    }

    /// Interior labels of arbitrary depth with respect to all generators.
    pub fn interior(&self, depth: usize) -> Vec<usize> {
        match depth {
            0 => (0..self.dim()).collect(),
            1 | 2 => self.basis.interior(depth).to_vec(),
            _ => {
                let gens: Vec<u32> = (1..=self.n()).collect();
                interior_sets(&self.spec, &self.basis, &gens, depth).pop().unwrap_or_default()
            }
        }
    }

    /// Interior labels with respect to a subset of generators only.
    pub fn interior_for(&self, gens: &[u32], depth: usize) -> Vec<usize> {
        if depth == 0 {
            return (0..self.dim()).collect();
        }
        interior_sets(&self.spec, &self.basis, gens, depth).pop().unwrap_or_default()
    }

    /// Copy with the weight in column `col` of `A_k` shifted by `eps`.
    /// Used as a negative control for the verification checks; the number
    /// operators keep their exact values.
    pub fn with_corrupted_weight(&self, k: u32, col: usize, eps: f64) -> Result<Self, RepError> {
        let mut generators = self.generators.clone();
        let g = &mut generators[k as usize - 1];
        let (row, w) = match g.column(col).first() {
            Some(&(r, w)) => (r, w),
            None => {
                return Err(RepError::InvalidSpec(format!(
                    "column {col} of A_{k} is zero; nothing to corrupt"
                )))
            }
        };
        g.set(row, col, w + C64::new(eps, 0.0));
        Self::assemble(
            self.spec,
            self.trunc,
            self.basis.clone(),
            generators,
            self.c_sq.clone(),
            self.d_sq.clone(),
            DEFAULT_EIGEN_TOL,
        )
    }

    /// The bare matrices and per-generator interior flags, with the
    /// representation tag stripped. This is what detection works from.
    pub fn generator_set(&self) -> GeneratorSet {
        GeneratorSet {
            q: self.q(),
            generators: self.generators.clone(),
            interior: (1..=self.n()).map(|k| self.interior_for(&[k], 1)).collect(),
        }
    }

    pub fn generator_coo(&self) -> Vec<CooMatrix> {
        self.generators.iter().map(SparseOperator::to_coo).collect()
    }
}

/// Weight of the return step `t -> label`; panics if the action is not
/// injective, which would make the number operators non-diagonal.
fn return_weight(spec: &RepSpec, t: &BasisLabel, k: u32, adjoint: bool, label: &BasisLabel) -> C64 {
    match spec.step(t, k, adjoint) {
        Step::To(back, w) if &back == label => w,
        _ => panic!("generator {k} of {spec} is not a weighted shift at {label}"),
    }
}

/// Generator matrices of some representation, stripped of their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub q: f64,
    pub generators: Vec<SparseOperator>,
    /// Per generator, the ordinals on which that generator and its adjoint
    /// act without touching the truncation boundary.
    pub interior: Vec<Vec<usize>>,
}

impl GeneratorSet {
    pub fn n(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.generators.first().map_or(0, SparseOperator::nrows)
    }

    /// Relabels basis index `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut interior: Vec<Vec<usize>> = self
            .interior
            .iter()
            .map(|set| set.iter().map(|&i| perm[i]).collect())
            .collect();
        interior.iter_mut().for_each(|s| s.sort_unstable());
        GeneratorSet {
            q: self.q,
            generators: self.generators.iter().map(|g| g.permuted(perm)).collect(),
            interior,
        }
    }

    /// Conjugates by the diagonal unitary `diag(exp(i θ_l))`.
    pub fn rephased(&self, angles: &[f64]) -> Self {
        let u: Vec<C64> = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let d = SparseOperator::from_diagonal(&u);
        let d_adj = d.adjoint();
        GeneratorSet {
            q: self.q,
            generators: self
                .generators
                .iter()
                .map(|g| d.matmul(g).and_then(|m| m.matmul(&d_adj)).expect("square"))
                .collect(),
            interior: self.interior.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorExport {
    pub operator: CooMatrix,
    pub interior: Vec<usize>,
}
