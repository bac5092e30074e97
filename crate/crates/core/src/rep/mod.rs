//! Truncated realizations of the representation families.
//!
//! Every family is built from the same ingredients: an ordered basis of
//! labels, the generator action on a label ([`RepSpec::step`]), and the
//! finite window. Targets that fall outside the window become zero columns,
//! so identities only hold on the interior labels recorded in [`Basis`].

mod basis;
mod family;
mod sparse;
mod spec;
mod spectral;

use thiserror::Error;

pub use basis::{interior_sets, Basis, BasisExport};
pub use family::{build_basis, build_generators, number_operators, polar_isometry, GeneratorExport, GeneratorSet, OperatorFamily};
pub use sparse::{CooEntry, CooMatrix, SparseError, SparseOperator, C64};
pub use spec::{level_weight_sq, q_integer, BasisLabel, FamilyTag, QParam, RepSpec, Step, Truncation};
pub use spectral::{spectral_resolution, Interval, IntervalSet, SpectralResolution, DEFAULT_EIGEN_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("invalid representation parameters: {0}")]
    InvalidSpec(String),
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error(transparent)]
    Structure(#[from] SparseError),
}
