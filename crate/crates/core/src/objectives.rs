//! The six feature-subset objectives and their optimization directions.
//!
//! Subset size and VIF are filter objectives computed from the data alone;
//! balanced accuracy, F1, statistical parity and equalised odds are wrapper
//! objectives computed from a classifier's test-partition predictions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{EvalError, MetricError};
use crate::mask::FeatureMask;
use crate::models::{self, ClassifierKind};

pub const DEFAULT_VIF_CAP: f64 = 10.0;
pub const N_OBJECTIVES: usize = 6;

/// R² at or above this is treated as perfect collinearity.
const PERFECT_R2: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SubsetSize,
    BalancedAccuracy,
    F1Score,
    Vif,
    StatisticalParity,
    EqualisedOdds,
}

impl Objective {
    /// Fixed column order used by every objective matrix.
    pub const ALL: [Objective; N_OBJECTIVES] = [
        Objective::SubsetSize,
        Objective::BalancedAccuracy,
        Objective::F1Score,
        Objective::Vif,
        Objective::StatisticalParity,
        Objective::EqualisedOdds,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Objective::SubsetSize | Objective::Vif => Direction::Min,
            _ => Direction::Max,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Objective::SubsetSize => "subset_size",
            Objective::BalancedAccuracy => "balanced_accuracy",
            Objective::F1Score => "f1_score",
            Objective::Vif => "vif",
            Objective::StatisticalParity => "statistical_parity",
            Objective::EqualisedOdds => "equalised_odds",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Objective::SubsetSize => "Subset size",
            Objective::BalancedAccuracy => "Balanced accuracy",
            Objective::F1Score => "F1 score",
            Objective::Vif => "VIF",
            Objective::StatisticalParity => "Statistical parity",
            Objective::EqualisedOdds => "Equalised odds",
        }
    }
}

/// Per-objective directions in [`Objective::ALL`] order.
pub const DIRECTIONS: [Direction; N_OBJECTIVES] = [
    Direction::Min,
    Direction::Max,
    Direction::Max,
    Direction::Min,
    Direction::Max,
    Direction::Max,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub subset_size: usize,
    pub balanced_accuracy: f64,
    pub f1_score: f64,
    pub vif: f64,
    pub statistical_parity: f64,
    pub equalised_odds: f64,
}

impl ObjectiveVector {
    pub fn to_array(&self) -> [f64; N_OBJECTIVES] {
        [
            self.subset_size as f64,
            self.balanced_accuracy,
            self.f1_score,
            self.vif,
            self.statistical_parity,
            self.equalised_odds,
        ]
    }

    pub fn get(&self, objective: Objective) -> f64 {
        self.to_array()[objective as usize]
    }
}

fn check_lengths(a: &[u8], b: &[u8]) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Mean of the two per-class recalls.
pub fn balanced_accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64, MetricError> {
    check_lengths(y_true, y_pred)?;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        totals[t as usize] += 1;
        if t == p {
            hits[t as usize] += 1;
        }
    }
    if totals[0] == 0 || totals[1] == 0 {
        return Err(MetricError::SingleClass);
    }
    Ok(0.5 * (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64))
}

/// Positive-class F1; 0 when precision + recall is 0 or undefined.
pub fn f1(y_true: &[u8], y_pred: &[u8]) -> Result<f64, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    // 2PR/(P+R) simplifies to 2tp / (2tp + fp + fn).
    let denom = 2 * tp + fp + fn_;
    Ok(if tp == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 })
}

/// min/max over a set of rates; 0/0 counts as perfectly equal.
fn min_max_ratio(rates: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    if hi <= 0.0 {
        1.0
    } else {
        lo / hi
    }
}

/// Disparate-impact ratio of positive-prediction rates across groups.
pub fn statistical_parity(y_pred: &[u8], groups: &[u32]) -> Result<f64, MetricError> {
    if y_pred.len() != groups.len() {
        return Err(MetricError::LengthMismatch(y_pred.len(), groups.len()));
    }
    let mut per_group: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (&p, &g) in y_pred.iter().zip(groups) {
        let e = per_group.entry(g).or_default();
        e.0 += p as usize;
        e.1 += 1;
    }
    if per_group.len() < 2 {
        return Err(MetricError::SingleGroup);
    }
    Ok(min_max_ratio(
        per_group.values().map(|&(pos, total)| pos as f64 / total as f64),
    ))
}

/// Minimum of the cross-group TPR ratio and TNR ratio.
///
/// Groups lacking either ground-truth class are skipped; with fewer than two
/// usable groups left the result is 1.
pub fn equalised_odds(y_true: &[u8], y_pred: &[u8], groups: &[u32]) -> Result<f64, MetricError> {
    check_lengths(y_true, y_pred)?;
    if groups.len() != y_true.len() {
        return Err(MetricError::LengthMismatch(y_true.len(), groups.len()));
    }
    // [tn, fp, fn, tp]
    let mut confusion: BTreeMap<u32, [usize; 4]> = BTreeMap::new();
    for ((&t, &p), &g) in y_true.iter().zip(y_pred).zip(groups) {
        confusion.entry(g).or_default()[(2 * t + p) as usize] += 1;
    }
    if confusion.len() < 2 {
        return Err(MetricError::SingleGroup);
    }
    let usable: Vec<[usize; 4]> = confusion
        .into_values()
        .filter(|c| c[0] + c[1] > 0 && c[2] + c[3] > 0)
        .collect();
    if usable.len() < 2 {
        return Ok(1.0);
    }
    let tpr = min_max_ratio(usable.iter().map(|c| c[3] as f64 / (c[2] + c[3]) as f64));
    let tnr = min_max_ratio(usable.iter().map(|c| c[0] as f64 / (c[0] + c[1]) as f64));
    Ok(tpr.min(tnr))
}

/// Pairwise Pearson correlations of all feature columns over a row subset.
///
/// A zero-variance column has no defined correlation and is flagged.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    m: usize,
    corr: Vec<f64>,
    constant: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn over_rows(ds: &Dataset, rows: &[usize]) -> Self {
        Self::for_columns(ds, rows, &(0..ds.n_features()).collect::<Vec<_>>())
    }

    /// Correlations restricted to `columns`, indexed `0..columns.len()`.
    fn for_columns(ds: &Dataset, rows: &[usize], columns: &[usize]) -> Self {
        let k = columns.len();
        let n = rows.len() as f64;
        let mut centred = vec![0.0; rows.len() * k];
        let mut norms = vec![0.0; k];
        for (j, &c) in columns.iter().enumerate() {
            let mean = rows.iter().map(|&r| ds.value(r, c)).sum::<f64>() / n;
            let mut ss = 0.0;
            for (i, &r) in rows.iter().enumerate() {
                let d = ds.value(r, c) - mean;
                centred[i * k + j] = d;
                ss += d * d;
            }
            norms[j] = ss.sqrt();
        }
        let scale_tol = 1e-12;
        let constant: Vec<bool> = columns
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let typical = rows.iter().map(|&r| ds.value(r, c).abs()).fold(0.0, f64::max).max(1.0);
                norms[j] <= scale_tol * typical * n.sqrt()
            })
            .collect();
        let mut corr = vec![0.0; k * k];
        for a in 0..k {
            corr[a * k + a] = 1.0;
            for b in (a + 1)..k {
                if constant[a] || constant[b] {
                    continue;
                }
                let dot: f64 = (0..rows.len()).map(|i| centred[i * k + a] * centred[i * k + b]).sum();
                let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
                corr[a * k + b] = r;
                corr[b * k + a] = r;
            }
        }
        Self { m: k, corr, constant }
    }

    /// Mean excess variance inflation over the selected columns, capped.
    pub fn mean_excess_vif(&self, columns: &[usize], cap: f64) -> f64 {
        let k = columns.len();
        if k <= 1 {
            return 0.0;
        }
        // Constant columns are collinear with the intercept.
        if columns.iter().any(|&c| self.constant[c]) {
            return cap;
        }
        let sub = DMatrix::from_fn(k, k, |a, b| self.corr[columns[a] * self.m + columns[b]]);
        let Some(chol) = sub.cholesky() else {
            return cap;
        };
        let inv = chol.inverse();
        let mut total = 0.0;
        for j in 0..k {
            // VIF_j = (R⁻¹)_jj = 1 / (1 − R²_j)
            let vif = inv[(j, j)];
            if !vif.is_finite() || 1.0 - 1.0 / vif >= PERFECT_R2 {
                return cap;
            }
            total += (vif - 1.0).max(0.0);
        }
        (total / k as f64).min(cap)
    }
}

/// Mean over selected columns of `R²_j / (1 − R²_j)`, where `R²_j` comes from
/// regressing column j on the other selected columns (with intercept) over
/// `rows`. Singleton subsets score 0; perfect collinearity scores `cap`.
pub fn vif_score(ds: &Dataset, rows: &[usize], columns: &[usize], cap: f64) -> f64 {
    if columns.len() <= 1 {
        return 0.0;
    }
    let corr = CorrelationMatrix::for_columns(ds, rows, columns);
    let local: Vec<usize> = (0..columns.len()).collect();
    corr.mean_excess_vif(&local, cap)
}

/// Scores candidates on one dataset/split/classifier combination.
///
/// Holds the train-partition correlation matrix so VIF of any subset is a
/// small Cholesky solve.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    ds: &'a Dataset,
    split: &'a Split,
    kind: ClassifierKind,
    vif_cap: f64,
    corr: CorrelationMatrix,
    test_truth: Vec<u8>,
    test_groups: Vec<u32>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ds: &'a Dataset, split: &'a Split, kind: ClassifierKind, vif_cap: f64) -> Self {
        Self {
            ds,
            split,
            kind,
            vif_cap,
            corr: CorrelationMatrix::over_rows(ds, &split.train),
            test_truth: split.test.iter().map(|&r| ds.target[r]).collect(),
            test_groups: split.test.iter().map(|&r| ds.sensitive_groups[r]).collect(),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn split(&self) -> &'a Split {
        self.split
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn vif_cap(&self) -> f64 {
        self.vif_cap
    }

    pub fn evaluate(&self, mask: &FeatureMask) -> Result<ObjectiveVector, EvalError> {
        let columns = mask.indices();
        let model = models::train(self.ds, self.split, &columns, self.kind)?;
        let pred = model.predict(self.ds, &self.split.test)?;
        Ok(ObjectiveVector {
            subset_size: columns.len(),
            balanced_accuracy: balanced_accuracy(&self.test_truth, &pred)?,
            f1_score: f1(&self.test_truth, &pred)?,
            vif: self.corr.mean_excess_vif(&columns, self.vif_cap),
            statistical_parity: statistical_parity(&pred, &self.test_groups)?,
            equalised_odds: equalised_odds(&self.test_truth, &pred, &self.test_groups)?,
        })
    }
}

pub fn evaluate_candidate(
    ds: &Dataset,
    split: &Split,
    mask: &FeatureMask,
    kind: ClassifierKind,
    vif_cap: f64,
) -> Result<ObjectiveVector, EvalError> {
    Evaluator::new(ds, split, kind, vif_cap).evaluate(mask)
}
