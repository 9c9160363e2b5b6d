//! Wrapper classifiers: mixed Gaussian/categorical Naive Bayes and logistic
//! regression fitted by full-batch gradient descent.
//!
//! Both models are deterministic given their inputs. Labels: NB predicts the
//! argmax posterior with ties going to class 0; LR predicts 1 when
//! `sigmoid(score) >= 0.5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset, Split};
use crate::error::ModelError;

pub const NB_VARIANCE_FLOOR: f64 = 1e-9;
pub const LR_LEARNING_RATE: f64 = 0.1;
pub const LR_MAX_ITERATIONS: usize = 500;
pub const LR_GRADIENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "nb")]
    NaiveBayes,
    #[serde(rename = "lr")]
    LogisticRegression,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::LogisticRegression => "lr",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(ClassifierKind::NaiveBayes),
            "lr" => Ok(ClassifierKind::LogisticRegression),
            other => Err(format!("unknown classifier '{other}' (expected nb or lr)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub columns: Vec<usize>,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes(NaiveBayesParams),
    LogisticRegression(LogisticParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub priors: [f64; 2],
    /// One entry per selected column, aligned with `TrainedModel::columns`.
    pub features: Vec<NbFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NbFeature {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Laplace-smoothed level probabilities per class.
    Categorical { probs: [Vec<f64>; 2] },
}

impl NbFeature {
    fn log_likelihood(&self, class: usize, x: f64) -> f64 {
        match self {
            NbFeature::Gaussian { mean, var } => {
                let v = var[class];
                let d = x - mean[class];
                -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v)
            }
            NbFeature::Categorical { probs } => {
                let table = &probs[class];
                let level = x as usize;
                match table.get(level) {
                    Some(&p) if x >= 0.0 => p.ln(),
                    // Unseen level: the smoothed mass of a zero count.
                    _ => table.iter().copied().fold(f64::INFINITY, f64::min).ln(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Train-partition column means and scales used for standardization.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub iterations: usize,
    /// Loss after every accepted step, starting from the initial loss.
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

impl TrainedModel {
    /// Positive-class log-odds for a full-width feature row.
    ///
    /// For both model kinds this score is additive across the selected
    /// features (plus a constant).
    pub fn log_odds(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::NaiveBayes(p) => {
                let mut score = p.priors[1].ln() - p.priors[0].ln();
                for (f, &c) in p.features.iter().zip(&self.columns) {
                    score += f.log_likelihood(1, row[c]) - f.log_likelihood(0, row[c]);
                }
                score
            }
            ModelParams::LogisticRegression(p) => {
                let mut z = p.intercept;
                for (j, &c) in self.columns.iter().enumerate() {
                    z += p.weights[j] * (row[c] - p.means[j]) / p.scales[j];
                }
                z
            }
        }
    }

    /// Class posterior `[P(0|x), P(1|x)]`.
    pub fn predict_proba(&self, row: &[f64]) -> [f64; 2] {
        let p1 = sigmoid(self.log_odds(row));
        [1.0 - p1, p1]
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let score = self.log_odds(row);
        match self.kind {
            ClassifierKind::NaiveBayes => u8::from(score > 0.0),
            ClassifierKind::LogisticRegression => u8::from(score >= 0.0),
        }
    }

    pub fn predict(&self, ds: &Dataset, rows: &[usize]) -> Result<Vec<u8>, ModelError> {
        let m = ds.n_features();
        if let Some(&bad) = self.columns.iter().find(|&&c| c >= m) {
            return Err(ModelError::ColumnOutOfRange { index: bad, m });
        }
        Ok(rows.iter().map(|&r| self.predict_row(ds.row(r))).collect())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Trains on the split's training partition.
pub fn train(
    ds: &Dataset,
    split: &Split,
    columns: &[usize],
    kind: ClassifierKind,
) -> Result<TrainedModel, ModelError> {
    train_on_rows(ds, &split.train, columns, kind)
}

pub fn train_on_rows(
    ds: &Dataset,
    rows: &[usize],
    columns: &[usize],
    kind: ClassifierKind,
) -> Result<TrainedModel, ModelError> {
    if columns.is_empty() {
        return Err(ModelError::EmptySelection);
    }
    let m = ds.n_features();
    if let Some(&bad) = columns.iter().find(|&&c| c >= m) {
        return Err(ModelError::ColumnOutOfRange { index: bad, m });
    }
    for class in [0u8, 1] {
        if !rows.iter().any(|&r| ds.target[r] == class) {
            return Err(ModelError::MissingClass(class));
        }
    }
    let params = match kind {
        ClassifierKind::NaiveBayes => ModelParams::NaiveBayes(fit_naive_bayes(ds, rows, columns)),
        ClassifierKind::LogisticRegression => {
            ModelParams::LogisticRegression(fit_logistic(ds, rows, columns)?)
        }
    };
    Ok(TrainedModel {
        kind,
        columns: columns.to_vec(),
        params,
    })
}

fn fit_naive_bayes(ds: &Dataset, rows: &[usize], columns: &[usize]) -> NaiveBayesParams {
    let mut counts = [0usize; 2];
    for &r in rows {
        counts[ds.target[r] as usize] += 1;
    }
    let total = rows.len() as f64;
    let priors = [counts[0] as f64 / total, counts[1] as f64 / total];

    let features = columns
        .iter()
        .map(|&c| match &ds.column_kinds[c] {
            ColumnKind::Categorical { levels } => {
                let mut tables = [vec![0usize; levels.len()], vec![0usize; levels.len()]];
                for &r in rows {
                    let level = ds.value(r, c) as usize;
                    tables[ds.target[r] as usize][level] += 1;
                }
                let l = levels.len() as f64;
                let probs = [0, 1].map(|k| {
                    tables[k]
                        .iter()
                        .map(|&cnt| (cnt as f64 + 1.0) / (counts[k] as f64 + l))
                        .collect()
                });
                NbFeature::Categorical { probs }
            }
            ColumnKind::Numeric => {
                let mut sum = [0.0; 2];
                for &r in rows {
                    sum[ds.target[r] as usize] += ds.value(r, c);
                }
                let mean = [sum[0] / counts[0] as f64, sum[1] / counts[1] as f64];
                let mut ss = [0.0; 2];
                for &r in rows {
                    let k = ds.target[r] as usize;
                    let d = ds.value(r, c) - mean[k];
                    ss[k] += d * d;
                }
                let var = [0, 1].map(|k| (ss[k] / counts[k] as f64).max(NB_VARIANCE_FLOOR));
                NbFeature::Gaussian { mean, var }
            }
        })
        .collect();

    NaiveBayesParams { priors, features }
}

fn fit_logistic(ds: &Dataset, rows: &[usize], columns: &[usize]) -> Result<LogisticParams, ModelError> {
    let k = columns.len();
    let n = rows.len();
    let mut means = vec![0.0; k];
    let mut scales = vec![0.0; k];
    for (j, &c) in columns.iter().enumerate() {
        let mean = rows.iter().map(|&r| ds.value(r, c)).sum::<f64>() / n as f64;
        let var = rows
            .iter()
            .map(|&r| (ds.value(r, c) - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        means[j] = mean;
        scales[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let mut x = vec![0.0; n * k];
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in columns.iter().enumerate() {
            x[i * k + j] = (ds.value(r, c) - means[j]) / scales[j];
        }
    }
    let y: Vec<f64> = rows.iter().map(|&r| f64::from(ds.target[r])).collect();

    let fit = gradient_descent(&x, &y, k, LR_LEARNING_RATE)
        .or_else(|_| gradient_descent(&x, &y, k, LR_LEARNING_RATE / 10.0))?;
    Ok(LogisticParams {
        weights: fit.weights,
        intercept: fit.intercept,
        means,
        scales,
        iterations: fit.iterations,
        loss_trace: fit.loss_trace,
    })
}

struct GdFit {
    weights: Vec<f64>,
    intercept: f64,
    iterations: usize,
    loss_trace: Vec<f64>,
}

/// Mean log-loss minimisation. A step that increases the loss is rejected and
/// the learning rate halved, so the accepted loss trace is non-increasing.
fn gradient_descent(x: &[f64], y: &[f64], k: usize, learning_rate: f64) -> Result<GdFit, ModelError> {
    let n = y.len();
    let inv_n = 1.0 / n as f64;
    let scores = |w: &[f64], b: f64, out: &mut [f64]| -> f64 {
        let mut loss = 0.0;
        for i in 0..n {
            let row = &x[i * k..(i + 1) * k];
            let z = b + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            out[i] = z;
            loss += softplus(z) - y[i] * z;
        }
        loss * inv_n
    };

    let mut w = vec![0.0; k];
    let mut b = 0.0;
    let mut z = vec![0.0; n];
    let mut loss = scores(&w, b, &mut z);
    let mut trace = vec![loss];
    let mut lr = learning_rate;
    let mut grad_w = vec![0.0; k];
    let mut trial_w = vec![0.0; k];
    let mut trial_z = vec![0.0; n];
    let mut need_grad = true;
    let mut grad_b = 0.0;
    let mut iterations = 0;

    while iterations < LR_MAX_ITERATIONS {
        if need_grad {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b = 0.0;
            for i in 0..n {
                let resid = sigmoid(z[i]) - y[i];
                grad_b += resid;
                let row = &x[i * k..(i + 1) * k];
                for (g, xv) in grad_w.iter_mut().zip(row) {
                    *g += resid * xv;
                }
            }
            grad_w.iter_mut().for_each(|g| *g *= inv_n);
            grad_b *= inv_n;
            need_grad = false;
        }
        let norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if norm < LR_GRADIENT_TOLERANCE {
            break;
        }
        iterations += 1;
        for j in 0..k {
            trial_w[j] = w[j] - lr * grad_w[j];
        }
        let trial_b = b - lr * grad_b;
        let trial_loss = scores(&trial_w, trial_b, &mut trial_z);
        if !trial_loss.is_finite() {
            return Err(ModelError::Diverged);
        }
        if trial_loss > loss {
            lr *= 0.5;
            continue;
        }
        std::mem::swap(&mut w, &mut trial_w);
        std::mem::swap(&mut z, &mut trial_z);
        b = trial_b;
        loss = trial_loss;
        trace.push(loss);
        need_grad = true;
    }

    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(ModelError::Diverged);
    }
    Ok(GdFit {
        weights: w,
        intercept: b,
        iterations,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_ds(cols: Vec<Vec<f64>>, target: Vec<u8>) -> Dataset {
        let m = cols.len();
        let n = target.len();
        let mut values = vec![0.0; n * m];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * m + j] = *v;
            }
        }
        let groups = (0..n).map(|i| (i % 2) as u32).collect();
        Dataset::new(
            "t",
            (0..m).map(|j| format!("f{j}")).collect(),
            values,
            target,
            0,
            groups,
            vec![ColumnKind::Numeric; m],
            "y",
            "1",
        )
        .unwrap()
    }

    #[test]
    fn lr_separable_reaches_perfect_training_accuracy() {
        let x0 = vec![-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let x1 = vec![0.3, -0.2, 0.1, 0.0, 0.2, -0.1, 0.4, -0.3];
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let ds = numeric_ds(vec![x0, x1], y.clone());
        let rows: Vec<usize> = (0..8).collect();
        let model = train_on_rows(&ds, &rows, &[0, 1], ClassifierKind::LogisticRegression).unwrap();
        assert_eq!(model.predict(&ds, &rows).unwrap(), y);
    }

    #[test]
    fn lr_loss_trace_is_monotone_and_deterministic() {
        let x0: Vec<f64> = (0..40).map(|i| ((i * 37) % 17) as f64 / 3.0).collect();
        let x1: Vec<f64> = (0..40).map(|i| ((i * 11) % 13) as f64).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from((i * 37) % 17 > 7 || i % 5 == 0)).collect();
        let ds = numeric_ds(vec![x0, x1], y);
        let rows: Vec<usize> = (0..40).collect();
        let a = train_on_rows(&ds, &rows, &[0, 1], ClassifierKind::LogisticRegression).unwrap();
        let b = train_on_rows(&ds, &rows, &[0, 1], ClassifierKind::LogisticRegression).unwrap();
        assert_eq!(a, b);
        let ModelParams::LogisticRegression(p) = &a.params else { unreachable!() };
        assert_eq!(p.loss_trace, match &b.params { ModelParams::LogisticRegression(q) => q.loss_trace.clone(), _ => unreachable!() });
        assert!(p.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.iterations <= LR_MAX_ITERATIONS);
        assert!(p.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn lr_zero_parameters_predict_positive() {
        let model = TrainedModel {
            kind: ClassifierKind::LogisticRegression,
            columns: vec![0],
            params: ModelParams::LogisticRegression(LogisticParams {
                weights: vec![0.0],
                intercept: 0.0,
                means: vec![0.0],
                scales: vec![1.0],
                iterations: 0,
                loss_trace: vec![],
            }),
        };
        for x in [-5.0, 0.0, 3.0] {
            assert_eq!(model.predict_row(&[x, 0.0]), 1);
        }
    }

    #[test]
    fn nb_ties_break_to_class_zero() {
        let model = TrainedModel {
            kind: ClassifierKind::NaiveBayes,
            columns: vec![0],
            params: ModelParams::NaiveBayes(NaiveBayesParams {
                priors: [0.5, 0.5],
                features: vec![NbFeature::Gaussian {
                    mean: [1.0, 1.0],
                    var: [2.0, 2.0],
                }],
            }),
        };
        for x in [-1.0, 1.0, 4.0] {
            assert_eq!(model.predict_row(&[x, 0.0]), 0);
        }
    }

    #[test]
    fn nb_hand_built_parameters_match_brute_force_posterior() {
        // Gaussian feature plus categorical feature, three query rows.
        let model = TrainedModel {
            kind: ClassifierKind::NaiveBayes,
            columns: vec![0, 1],
            params: ModelParams::NaiveBayes(NaiveBayesParams {
                priors: [0.6, 0.4],
                features: vec![
                    NbFeature::Gaussian {
                        mean: [0.0, 2.0],
                        var: [1.0, 4.0],
                    },
                    NbFeature::Categorical {
                        probs: [vec![0.7, 0.3], vec![0.2, 0.8]],
                    },
                ],
            }),
        };
        let gauss = |x: f64, mu: f64, var: f64| {
            (-(x - mu) * (x - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
        };
        let cat = [[0.7, 0.3], [0.2, 0.8]];
        let queries = [[-0.5, 0.0], [1.8, 1.0], [1.0, 0.0]];
        for q in queries {
            let j0 = 0.6 * gauss(q[0], 0.0, 1.0) * cat[0][q[1] as usize];
            let j1 = 0.4 * gauss(q[0], 2.0, 4.0) * cat[1][q[1] as usize];
            let post1 = j1 / (j0 + j1);
            let p = model.predict_proba(&q);
            assert!((p[1] - post1).abs() < 1e-12);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
            assert_eq!(model.predict_row(&q), u8::from(j1 > j0));
        }
        // Oracle labels: row 0 strongly class 0, row 1 class 1.
        assert_eq!(model.predict_row(&queries[0]), 0);
        assert_eq!(model.predict_row(&queries[1]), 1);
    }

    #[test]
    fn nb_independent_feature_follows_prior() {
        // Class 1: 6 rows (levels a,b ×3), class 0: 2 rows (a,b).
        // Laplace: P(a|1) = 4/8, P(a|0) = 2/4, so the posterior is the prior 0.75.
        let csv = "x,s,y\na,m,1\nb,f,1\na,m,1\nb,f,1\na,m,1\nb,f,1\na,m,0\nb,f,0\n";
        let spec = crate::data::CsvSpec {
            target: "y".into(),
            sensitive: "s".into(),
            positive_label: "1".into(),
        };
        let ds = crate::data::read_csv(csv.as_bytes(), "t", &spec).unwrap();
        let rows: Vec<usize> = (0..8).collect();
        let model = train_on_rows(&ds, &rows, &[0], ClassifierKind::NaiveBayes).unwrap();
        for r in &rows {
            let p = model.predict_proba(ds.row(*r));
            assert!((p[1] - 0.75).abs() < 1e-12);
        }
        assert_eq!(model.predict(&ds, &rows).unwrap(), vec![1; 8]);
    }

    #[test]
    fn nb_variance_floor_and_priors() {
        let ds = numeric_ds(vec![vec![1.0, 1.0, 2.0, 2.0], vec![0.0, 1.0, 0.0, 1.0]], vec![0, 0, 1, 1]);
        let model = train_on_rows(&ds, &[0, 1, 2, 3], &[0], ClassifierKind::NaiveBayes).unwrap();
        let ModelParams::NaiveBayes(p) = &model.params else { unreachable!() };
        assert!((p.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let NbFeature::Gaussian { var, .. } = &p.features[0] else { unreachable!() };
        assert_eq!(*var, [NB_VARIANCE_FLOOR; 2]);
        assert_eq!(model.predict(&ds, &[0, 2]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn training_errors() {
        let ds = numeric_ds(vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]], vec![0, 1, 1]);
        assert_eq!(
            train_on_rows(&ds, &[0, 1, 2], &[], ClassifierKind::NaiveBayes).unwrap_err(),
            ModelError::EmptySelection
        );
        assert_eq!(
            train_on_rows(&ds, &[1, 2], &[0], ClassifierKind::LogisticRegression).unwrap_err(),
            ModelError::MissingClass(0)
        );
        assert_eq!(
            train_on_rows(&ds, &[0, 1], &[5], ClassifierKind::NaiveBayes).unwrap_err(),
            ModelError::ColumnOutOfRange { index: 5, m: 2 }
        );
    }

    #[test]
    fn classifier_kind_parsing() {
        assert_eq!("LR".parse::<ClassifierKind>().unwrap(), ClassifierKind::LogisticRegression);
        assert_eq!("nb".parse::<ClassifierKind>().unwrap(), ClassifierKind::NaiveBayes);
        assert!("svm".parse::<ClassifierKind>().is_err());
        assert_eq!(serde_json::to_string(&ClassifierKind::NaiveBayes).unwrap(), "\"nb\"");
    }
}
