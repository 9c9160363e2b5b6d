//! TOPSIS ranking and weight-scheme sensitivity.
//!
//! Columns are vector-normalized (divided by their Euclidean norm) and then
//! weighted. The positive and negative ideals are the best and worst weighted
//! values attained per objective; the performance score is
//! `S⁻ / (S⁺ + S⁻)`.

use serde::{Deserialize, Serialize};

use super::weights::{compute_weights, WeightScheme, WeightVector};
use super::ObjectiveMatrix;
use crate::error::InterpretError;
use crate::objectives::{Direction, N_OBJECTIVES};

/// Raw TOPSIS quantities for an arbitrary number of criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct TopsisScores {
    pub weighted: Vec<Vec<f64>>,
    pub positive_ideal: Vec<f64>,
    pub negative_ideal: Vec<f64>,
    pub distance_positive: Vec<f64>,
    pub distance_negative: Vec<f64>,
    pub scores: Vec<f64>,
}

pub fn topsis_scores<R: AsRef<[f64]>>(rows: &[R], directions: &[Direction], weights: &[f64]) -> TopsisScores {
    let c = directions.len();
    let n = rows.len();
    let norms: Vec<f64> = (0..c)
        .map(|j| rows.iter().map(|r| r.as_ref()[j].powi(2)).sum::<f64>().sqrt())
        .collect();
    let weighted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            (0..c)
                .map(|j| if norms[j] > 0.0 { r.as_ref()[j] / norms[j] * weights[j] } else { 0.0 })
                .collect()
        })
        .collect();
    let mut positive_ideal = vec![0.0; c];
    let mut negative_ideal = vec![0.0; c];
    for j in 0..c {
        let (lo, hi) = weighted
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        (positive_ideal[j], negative_ideal[j]) = match directions[j] {
            Direction::Max => (hi, lo),
            Direction::Min => (lo, hi),
        };
    }
    let dist = |r: &[f64], ideal: &[f64]| r.iter().zip(ideal).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let distance_positive: Vec<f64> = weighted.iter().map(|r| dist(r, &positive_ideal)).collect();
    let distance_negative: Vec<f64> = weighted.iter().map(|r| dist(r, &negative_ideal)).collect();
    let scores = (0..n)
        .map(|i| {
            let total = distance_positive[i] + distance_negative[i];
            // A lone solution, or one sitting on both ideals, is the ideal.
            if n == 1 || total == 0.0 {
                1.0
            } else {
                distance_negative[i] / total
            }
        })
        .collect();
    TopsisScores {
        weighted,
        positive_ideal,
        negative_ideal,
        distance_positive,
        distance_negative,
        scores,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub weights: WeightVector,
    /// Row identities, aligned with every per-solution vector below.
    pub solution_ids: Vec<usize>,
    pub scores: Vec<f64>,
    /// 1-based rank per solution.
    pub ranks: Vec<usize>,
    /// Solution ids from best to worst.
    pub order: Vec<usize>,
    pub weighted_matrix: Vec<[f64; N_OBJECTIVES]>,
    pub positive_ideal: [f64; N_OBJECTIVES],
    pub negative_ideal: [f64; N_OBJECTIVES],
    pub distance_positive: Vec<f64>,
    pub distance_negative: Vec<f64>,
}

impl RankingResult {
    pub fn score_of(&self, id: usize) -> Option<f64> {
        self.solution_ids.iter().position(|&s| s == id).map(|i| self.scores[i])
    }

    pub fn rank_of(&self, id: usize) -> Option<usize> {
        self.solution_ids.iter().position(|&s| s == id).map(|i| self.ranks[i])
    }
}

/// Ranks by descending score; ties go to the smaller subset, then the lower id.
pub fn topsis_rank(
    matrix: &ObjectiveMatrix,
    directions: &[Direction; N_OBJECTIVES],
    weights: &WeightVector,
) -> Result<RankingResult, InterpretError> {
    if matrix.is_empty() {
        return Err(InterpretError::Empty);
    }
    let raw = topsis_scores(matrix.rows(), directions, &weights.values);
    let ids = matrix.ids().to_vec();
    let mut positions: Vec<usize> = (0..matrix.len()).collect();
    positions.sort_by(|&a, &b| {
        raw.scores[b]
            .total_cmp(&raw.scores[a])
            .then(matrix.rows()[a][0].total_cmp(&matrix.rows()[b][0]))
            .then(ids[a].cmp(&ids[b]))
    });
    let mut ranks = vec![0; matrix.len()];
    for (r, &pos) in positions.iter().enumerate() {
        ranks[pos] = r + 1;
    }
    let to_array = |v: &[f64]| -> [f64; N_OBJECTIVES] { v.try_into().expect("six objectives") };
    Ok(RankingResult {
        weights: weights.clone(),
        order: positions.iter().map(|&p| ids[p]).collect(),
        solution_ids: ids,
        scores: raw.scores,
        ranks,
        weighted_matrix: raw.weighted.iter().map(|r| to_array(r)).collect(),
        positive_ideal: to_array(&raw.positive_ideal),
        negative_ideal: to_array(&raw.negative_ideal),
        distance_positive: raw.distance_positive,
        distance_negative: raw.distance_negative,
    })
}

pub const SENSITIVITY_TOP: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityColumn {
    pub scheme: String,
    pub weights: [f64; N_OBJECTIVES],
    /// Best solution ids, at most five.
    pub top: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopOverlap {
    pub a: String,
    pub b: String,
    pub shared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub columns: Vec<SensitivityColumn>,
    pub overlaps: Vec<TopOverlap>,
}

pub fn compare_weight_schemes(
    matrix: &ObjectiveMatrix,
    directions: &[Direction; N_OBJECTIVES],
    schemes: &[WeightScheme],
) -> Result<SensitivityTable, InterpretError> {
    if schemes.is_empty() {
        return Err(InterpretError::InvalidWeights("no weight schemes to compare".into()));
    }
    let columns = schemes
        .iter()
        .map(|scheme| {
            let weights = compute_weights(matrix, directions, scheme)?;
            let ranking = topsis_rank(matrix, directions, &weights)?;
            Ok(SensitivityColumn {
                scheme: scheme.name().to_string(),
                weights: weights.values,
                top: ranking.order.into_iter().take(SENSITIVITY_TOP).collect(),
            })
        })
        .collect::<Result<Vec<_>, InterpretError>>()?;
    let mut overlaps = Vec::new();
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            let shared = columns[i].top.iter().filter(|id| columns[j].top.contains(id)).count();
            overlaps.push(TopOverlap {
                a: columns[i].scheme.clone(),
                b: columns[j].scheme.clone(),
                shared,
            });
        }
    }
    Ok(SensitivityTable { columns, overlaps })
}
