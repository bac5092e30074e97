//! Numeric checks of the operator identities on truncations, the q-Wold
//! decomposition and the commutant heuristic.
//!
//! Every check quantifies over interior labels only and reports how many
//! it looked at; a check that saw no vectors is inconclusive, not passing.

mod checks;
mod commutant;
mod dense;
mod wold;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::{
    check_eigenvalue_laws, check_shift_identity, check_structure_bc, predicted_c_sq, predicted_d_sq,
    relation_residuals, sample_intervals, series_check, series_number_operator, spectrum_check, SeriesReport,
    SpectrumReport,
};
pub use commutant::{commutant_dimension, CommutantInput, CommutantReport};
pub use wold::{q_wold, FockBlock, UnboundedBlock, UnitaryBlock, WoldDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub vectors_checked: usize,
    pub pass: bool,
    pub status: Status,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn new(check: impl Into<String>, tolerance: f64, max_residual: f64, vectors_checked: usize) -> Self {
        let status = if vectors_checked == 0 {
            Status::Inconclusive
        } else if max_residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        ResidualReport {
            check: check.into(),
            tolerance,
            max_residual,
            vectors_checked,
            pass: status == Status::Pass,
            status,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("input rejected: relation residual {residual:.3e} exceeds tolerance {tol:.1e} on the flagged interior")]
    RejectInput { residual: f64, tol: f64 },
    #[error("unclassified remainder: eigenvalues {eigenvalues:?} on interior vectors fit no block")]
    UnclassifiedRemainder { eigenvalues: Vec<f64> },
    #[error("operator must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("interior ordinal {0} out of range")]
    BadInterior(usize),
    #[error(transparent)]
    Classify(#[from] crate::classify::ClassifyError),
}
