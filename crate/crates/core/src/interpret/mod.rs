//! Interpretation of a Pareto front: similarity detection, objective
//! weighting, TOPSIS ranking, feature frequency and feature contribution.
//!
//! Everything here also works on an externally supplied objective matrix, so
//! published tables can be replayed without running the search.

pub mod cluster;
pub mod contribution;
pub mod topsis;
pub mod weights;

pub use cluster::{cluster_solutions, ClusterAssignment, ClusterK};
pub use contribution::{feature_contribution, Contribution, ContributionOptions};
pub use topsis::{compare_weight_schemes, topsis_rank, topsis_scores, RankingResult, SensitivityTable};
pub use weights::{compute_weights, normalize_custom, WeightScheme, WeightVector};

use crate::error::InterpretError;
use crate::moea::SolutionSet;
use crate::objectives::N_OBJECTIVES;

/// Solutions × objectives, in the fixed objective order, with a stable id
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveMatrix {
    rows: Vec<[f64; N_OBJECTIVES]>,
    ids: Vec<usize>,
}

impl ObjectiveMatrix {
    /// Rows get ids `0..n`.
    pub fn from_rows(rows: Vec<[f64; N_OBJECTIVES]>) -> Result<Self, InterpretError> {
        let ids = (0..rows.len()).collect();
        Self::with_ids(rows, ids)
    }

    pub fn with_ids(rows: Vec<[f64; N_OBJECTIVES]>, ids: Vec<usize>) -> Result<Self, InterpretError> {
        assert_eq!(rows.len(), ids.len(), "one id per row");
        if let Some(bad) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(InterpretError::NonFinite(ids[bad]));
        }
        Ok(Self { rows, ids })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; N_OBJECTIVES]] {
        &self.rows
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows whose id passes `keep`, ids preserved.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Self {
        let (rows, ids) = self
            .rows
            .iter()
            .zip(&self.ids)
            .filter(|(_, &id)| keep(id))
            .map(|(r, &id)| (*r, id))
            .unzip();
        Self { rows, ids }
    }
}

/// Objective values of every solution with VIF clamped to `vif_cap`.
pub fn objective_matrix(ss: &SolutionSet, vif_cap: f64) -> Result<ObjectiveMatrix, InterpretError> {
    if ss.is_empty() {
        return Err(InterpretError::Empty);
    }
    let rows = ss
        .solutions
        .iter()
        .map(|s| {
            let mut r = s.objectives.to_array();
            if r[3].is_nan() || r[3] > vif_cap {
                r[3] = vif_cap;
            }
            r
        })
        .collect();
    ObjectiveMatrix::from_rows(rows)
}

/// How many solutions select each feature.
pub fn feature_frequency(ss: &SolutionSet) -> Vec<usize> {
    let m = ss.provenance.dataset.m;
    let mut counts = vec![0; m];
    for s in &ss.solutions {
        for i in s.mask.indices() {
            counts[i] += 1;
        }
    }
    counts
}
