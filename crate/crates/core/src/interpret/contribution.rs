//! Monte-Carlo Shapley attribution of a trained model's positive-class
//! log-odds to its selected features.
//!
//! Each draw takes a random feature ordering and a random training row as the
//! background, then switches features from background to instance values in
//! that order; a feature's marginal is the change in log-odds when it is
//! switched. Per-row estimates are averaged over draws and the reported value
//! is the mean absolute estimate over an evaluation subsample of test rows.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::InterpretError;
use crate::mask::FeatureMask;
use crate::models::{self, ClassifierKind, TrainedModel};

pub const DEFAULT_SAMPLES: usize = 500;
pub const MAX_EVAL_ROWS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionOptions {
    pub samples: usize,
    pub max_eval_rows: usize,
    pub seed: u64,
}

impl Default for ContributionOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            max_eval_rows: MAX_EVAL_ROWS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    /// Mean absolute Shapley estimate per feature; 0 for unselected features.
    pub values: Vec<f64>,
    pub samples: usize,
    pub eval_rows: usize,
}

/// Trains the solution's model on the training partition and attributes it.
pub fn feature_contribution(
    ds: &Dataset,
    split: &Split,
    mask: &FeatureMask,
    kind: ClassifierKind,
    options: &ContributionOptions,
) -> Result<Contribution, InterpretError> {
    let model = models::train(ds, split, &mask.indices(), kind)?;
    let eval = eval_subsample(&split.test, options.max_eval_rows, options.seed);
    shapley_for_model(&model, ds, &split.train, &eval, options)
}

/// Attribution of an already-trained model, explaining `eval_rows` against
/// `background_rows`.
pub fn shapley_for_model(
    model: &TrainedModel,
    ds: &Dataset,
    background_rows: &[usize],
    eval_rows: &[usize],
    options: &ContributionOptions,
) -> Result<Contribution, InterpretError> {
    if options.samples == 0 {
        return Err(InterpretError::NoSamples);
    }
    if background_rows.is_empty() || eval_rows.is_empty() {
        return Err(InterpretError::Empty);
    }
    let columns = &model.columns;
    // Each row draws from its own stream so the result does not depend on
    // how rows are scheduled across threads.
    let per_row: Vec<Vec<f64>> = eval_rows
        .par_iter()
        .enumerate()
        .map(|(pos, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(pos as u64 + 1);
            let instance = ds.row(r);
            let mut phi = vec![0.0; columns.len()];
            let mut order: Vec<usize> = (0..columns.len()).collect();
            for _ in 0..options.samples {
                order.shuffle(&mut rng);
                let bg = background_rows[rng.gen_range(0..background_rows.len())];
                let mut x = ds.row(bg).to_vec();
                let mut prev = model.log_odds(&x);
                for &k in &order {
                    let c = columns[k];
                    x[c] = instance[c];
                    let next = model.log_odds(&x);
                    phi[k] += next - prev;
                    prev = next;
                }
            }
            phi.iter().map(|v| v / options.samples as f64).collect()
        })
        .collect();
    let mut values = vec![0.0; ds.n_features()];
    for phi in &per_row {
        for (k, &c) in columns.iter().enumerate() {
            values[c] += phi[k].abs();
        }
    }
    for v in &mut values {
        *v /= per_row.len() as f64;
    }
    Ok(Contribution {
        values,
        samples: options.samples,
        eval_rows: eval_rows.len(),
    })
}

/// At most `max` rows of `rows`, sampled without replacement, kept sorted.
fn eval_subsample(rows: &[usize], max: usize, seed: u64) -> Vec<usize> {
    if rows.len() <= max {
        return rows.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, rows.len(), max).into_iter().map(|i| rows[i]).collect();
    picked.sort_unstable();
    picked
}
