//! Objective weighting schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ObjectiveMatrix;
use crate::error::InterpretError;
use crate::objectives::{Direction, Objective, N_OBJECTIVES};

/// Shift applied to min-max normalized values before taking logarithms.
const ENTROPY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Equal,
    /// Range divided by population standard deviation.
    #[serde(rename = "rstd")]
    RangeOverStd,
    Entropy,
    Custom(Vec<f64>),
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Equal => "equal",
            WeightScheme::RangeOverStd => "rstd",
            WeightScheme::Entropy => "entropy",
            WeightScheme::Custom(_) => "custom",
        }
    }

    /// The three data-independent presets compared in sensitivity tables.
    pub fn presets() -> Vec<WeightScheme> {
        vec![WeightScheme::Equal, WeightScheme::RangeOverStd, WeightScheme::Entropy]
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "equal" => Ok(WeightScheme::Equal),
            "rstd" | "r/std" | "range_over_std" => Ok(WeightScheme::RangeOverStd),
            "entropy" => Ok(WeightScheme::Entropy),
            other => Err(format!("unknown weight scheme '{other}' (expected equal, rstd or entropy)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub scheme: String,
    pub values: [f64; N_OBJECTIVES],
    /// Objectives by descending weight; ties keep column order.
    pub rank_of_objectives: Vec<Objective>,
    /// 1-based rank of each objective, in column order.
    pub ranks: [usize; N_OBJECTIVES],
}

impl WeightVector {
    fn from_values(scheme: &str, values: [f64; N_OBJECTIVES]) -> Self {
        let mut order: Vec<usize> = (0..N_OBJECTIVES).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let mut ranks = [0; N_OBJECTIVES];
        for (r, &j) in order.iter().enumerate() {
            ranks[j] = r + 1;
        }
        Self {
            scheme: scheme.to_string(),
            values,
            rank_of_objectives: order.into_iter().map(|j| Objective::ALL[j]).collect(),
            ranks,
        }
    }
}

/// Validates and normalizes user weights to sum 1.
pub fn normalize_custom(raw: &[f64]) -> Result<[f64; N_OBJECTIVES], InterpretError> {
    if raw.len() != N_OBJECTIVES {
        return Err(InterpretError::InvalidWeights(format!(
            "expected {N_OBJECTIVES} weights, got {}",
            raw.len()
        )));
    }
    if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(InterpretError::InvalidWeights("weights must be finite and non-negative".into()));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(InterpretError::InvalidWeights("at least one weight must be positive".into()));
    }
    let mut out = [0.0; N_OBJECTIVES];
    for (o, w) in out.iter_mut().zip(raw) {
        *o = w / total;
    }
    Ok(out)
}

pub fn compute_weights(
    matrix: &ObjectiveMatrix,
    directions: &[Direction; N_OBJECTIVES],
    scheme: &WeightScheme,
) -> Result<WeightVector, InterpretError> {
    let values = match scheme {
        WeightScheme::Equal => [1.0 / N_OBJECTIVES as f64; N_OBJECTIVES],
        WeightScheme::Custom(raw) => normalize_custom(raw)?,
        WeightScheme::RangeOverStd => {
            require_two(matrix)?;
            let raw: Vec<f64> = (0..N_OBJECTIVES)
                .map(|j| {
                    let col = matrix.column(j);
                    let (lo, hi) = min_max(&col);
                    let sd = population_std(&col);
                    if sd > 0.0 && hi > lo {
                        (hi - lo) / sd
                    } else {
                        0.0
                    }
                })
                .collect();
            normalize_nonzero(&raw)?
        }
        WeightScheme::Entropy => {
            require_two(matrix)?;
            let n = matrix.len() as f64;
            let raw: Vec<f64> = (0..N_OBJECTIVES)
                .map(|j| {
                    let col = matrix.column(j);
                    let (lo, hi) = min_max(&col);
                    if hi <= lo {
                        // Uniform proportions: entropy 1 exactly.
                        return 0.0;
                    }
                    let scaled: Vec<f64> = col
                        .iter()
                        .map(|&v| {
                            let x = (v - lo) / (hi - lo);
                            let benefit = if directions[j] == Direction::Min { 1.0 - x } else { x };
                            benefit + ENTROPY_EPS
                        })
                        .collect();
                    let total: f64 = scaled.iter().sum();
                    let entropy = -scaled
                        .iter()
                        .map(|&s| {
                            let p = s / total;
                            p * p.ln()
                        })
                        .sum::<f64>()
                        / n.ln();
                    (1.0 - entropy).max(0.0)
                })
                .collect();
            normalize_nonzero(&raw)?
        }
    };
    Ok(WeightVector::from_values(scheme.name(), values))
}

fn require_two(matrix: &ObjectiveMatrix) -> Result<(), InterpretError> {
    if matrix.len() < 2 {
        return Err(InterpretError::TooFewSolutions {
            needed: 2,
            found: matrix.len(),
        });
    }
    Ok(())
}

fn normalize_nonzero(raw: &[f64]) -> Result<[f64; N_OBJECTIVES], InterpretError> {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(InterpretError::AllConstant);
    }
    let mut out = [0.0; N_OBJECTIVES];
    for (o, w) in out.iter_mut().zip(raw) {
        *o = w / total;
    }
    Ok(out)
}

fn min_max(col: &[f64]) -> (f64, f64) {
    col.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn population_std(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::DIRECTIONS;

    fn matrix(rows: Vec<[f64; 6]>) -> ObjectiveMatrix {
        ObjectiveMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn equal_weights() {
        let w = compute_weights(&matrix(vec![[1.0; 6]]), &DIRECTIONS, &WeightScheme::Equal).unwrap();
        assert!(w.values.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
        assert_eq!(w.ranks, [1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn range_over_std_hand_values() {
        // Column 0: {1, 2, 3}: r = 2, σ = sqrt(2/3); column 1: {0, 0, 1}: r = 1, σ = sqrt(2)/3.
        // Columns 2..5 constant → weight 0.
        let m = matrix(vec![
            [1.0, 0.0, 0.5, 0.5, 0.5, 0.5],
            [2.0, 0.0, 0.5, 0.5, 0.5, 0.5],
            [3.0, 1.0, 0.5, 0.5, 0.5, 0.5],
        ]);
        let w = compute_weights(&m, &DIRECTIONS, &WeightScheme::RangeOverStd).unwrap();
        let a = 2.0 / (2.0f64 / 3.0).sqrt();
        let b = 1.0 / (2.0f64.sqrt() / 3.0);
        assert!((w.values[0] - a / (a + b)).abs() < 1e-12);
        assert!((w.values[1] - b / (a + b)).abs() < 1e-12);
        assert_eq!(&w.values[2..], &[0.0; 4]);
        assert_eq!(w.rank_of_objectives[0], Objective::SubsetSize);
        assert!((w.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_uniform_column_gets_zero() {
        let m = matrix(vec![
            [1.0, 0.2, 0.5, 0.1, 0.9, 0.5],
            [2.0, 0.8, 0.5, 0.3, 0.7, 0.5],
            [4.0, 0.5, 0.5, 0.2, 0.8, 0.5],
        ]);
        let w = compute_weights(&m, &DIRECTIONS, &WeightScheme::Entropy).unwrap();
        assert_eq!(w.values[2], 0.0);
        assert_eq!(w.values[5], 0.0);
        assert!(w.values.iter().all(|&v| v >= 0.0));
        assert!((w.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_flips_cost_columns() {
        // One outlier that is best on a cost column concentrates mass after flipping.
        let cost_first = matrix(vec![
            [0.0, 0.5, 0.5, 0.0, 0.5, 0.5],
            [1.0, 0.5, 0.5, 1.0, 0.5, 0.5],
            [1.0, 0.5, 0.5, 0.9, 0.5, 0.4],
        ]);
        let flipped = compute_weights(&cost_first, &DIRECTIONS, &WeightScheme::Entropy).unwrap();
        let unflipped = compute_weights(&cost_first, &[Direction::Max; 6], &WeightScheme::Entropy).unwrap();
        assert_ne!(flipped.values, unflipped.values);
    }

    #[test]
    fn errors() {
        let constant = matrix(vec![[1.0; 6], [1.0; 6]]);
        assert_eq!(
            compute_weights(&constant, &DIRECTIONS, &WeightScheme::RangeOverStd).unwrap_err(),
            InterpretError::AllConstant
        );
        assert_eq!(
            compute_weights(&constant, &DIRECTIONS, &WeightScheme::Entropy).unwrap_err(),
            InterpretError::AllConstant
        );
        let single = matrix(vec![[1.0; 6]]);
        assert!(matches!(
            compute_weights(&single, &DIRECTIONS, &WeightScheme::RangeOverStd),
            Err(InterpretError::TooFewSolutions { .. })
        ));
        assert!(normalize_custom(&[1.0, -1.0, 0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(normalize_custom(&[0.0; 6]).is_err());
        assert!(normalize_custom(&[1.0; 5]).is_err());
        assert_eq!(normalize_custom(&[2.0; 6]).unwrap(), [1.0 / 6.0; 6]);
    }

    #[test]
    fn scheme_parsing_and_serde() {
        assert_eq!("rstd".parse::<WeightScheme>().unwrap(), WeightScheme::RangeOverStd);
        assert!("pareto".parse::<WeightScheme>().is_err());
        assert_eq!(serde_json::to_string(&WeightScheme::RangeOverStd).unwrap(), "\"rstd\"");
        let custom: WeightScheme = serde_json::from_str("{\"custom\":[1,1,1,1,1,1]}").unwrap();
        assert_eq!(custom, WeightScheme::Custom(vec![1.0; 6]));
    }
}
