//! End-to-end driver: split, search, baseline and report.

use serde::{Deserialize, Serialize};

use crate::data::{stratified_split, Dataset, Split, DEFAULT_TEST_FRACTION};
use crate::error::{ConfigError, DataError, EvalError, InterpretError};
use crate::mask::FeatureMask;
use crate::models::ClassifierKind;
use crate::moea::{self, GaConfig, GaRun, Progress, RunError};
use crate::objectives::{Evaluator, DEFAULT_VIF_CAP};
use crate::report::{build_report, Baseline, InterpretationReport, ModelContext, ReportOptions};

/// Optional replacements for the sizing-rule defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaOverrides {
    pub population_size: Option<usize>,
    pub mutation_prob: Option<f64>,
    pub crossover_prob: Option<f64>,
    pub max_evaluations: Option<usize>,
    pub reference_divisions: Option<usize>,
}

impl GaOverrides {
    /// Defaults for `m` features with overrides applied. An overridden
    /// population without an overridden budget keeps the `2p²` rule.
    pub fn apply(&self, m: usize, seed: u64) -> GaConfig {
        let mut cfg = GaConfig::for_features(m, seed);
        if let Some(p) = self.population_size {
            cfg.population_size = p;
            cfg.max_evaluations = 2 * p * p;
        }
        if let Some(v) = self.mutation_prob {
            cfg.mutation_prob = v;
        }
        if let Some(v) = self.crossover_prob {
            cfg.crossover_prob = v;
        }
        if let Some(v) = self.max_evaluations {
            cfg.max_evaluations = v;
        }
        if let Some(v) = self.reference_divisions {
            cfg.reference_divisions = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub classifier: ClassifierKind,
    pub seed: u64,
    pub test_fraction: f64,
    pub vif_cap: f64,
    pub ga: GaOverrides,
    pub report: ReportOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::LogisticRegression,
            seed: 0,
            test_fraction: DEFAULT_TEST_FRACTION,
            vif_cap: DEFAULT_VIF_CAP,
            ga: GaOverrides::default(),
            report: ReportOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn ga_config(&self, m: usize) -> GaConfig {
        self.ga.apply(m, self.seed)
    }

    /// Checks everything that can be checked before loading data rows.
    pub fn validate(&self, m: usize) -> Result<(), ConfigError> {
        if !(self.vif_cap.is_finite() && self.vif_cap > 0.0) {
            return Err(ConfigError::VifCap(self.vif_cap));
        }
        self.ga_config(m).validate(m)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("baseline evaluation failed: {0}")]
    Baseline(EvalError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub split: Split,
    pub run: GaRun,
    pub report: InterpretationReport,
}

/// All features except the sensitive one.
pub fn baseline_mask(ds: &Dataset) -> FeatureMask {
    let m = ds.n_features();
    let keep: Vec<usize> = (0..m).filter(|&i| i != ds.sensitive_index).collect();
    FeatureMask::from_indices(m, &keep)
}

pub fn run_pipeline(
    ds: &Dataset,
    cfg: &PipelineConfig,
    on_progress: impl FnMut(Progress),
) -> Result<PipelineOutput, PipelineError> {
    let m = ds.n_features();
    cfg.validate(m)?;
    let split = stratified_split(ds, cfg.test_fraction, cfg.seed)?;
    let evaluator = Evaluator::new(ds, &split, cfg.classifier, cfg.vif_cap);
    let run = moea::run_detailed(&evaluator, &cfg.ga_config(m), on_progress)?;
    let mask = baseline_mask(ds);
    let baseline = evaluator.evaluate(&mask).map_err(PipelineError::Baseline)?;
    let context = ModelContext {
        dataset: ds,
        split: &split,
        test_fraction: cfg.test_fraction,
    };
    // One seed drives the split, the search, clustering and sampling.
    let mut options = cfg.report.clone();
    options.seed = cfg.seed;
    options.contribution.seed = cfg.seed;
    let mut report = build_report(&run.front, &ds.feature_names, Some(context), &options)?;
    report.baseline = Some(Baseline {
        mask,
        objectives: baseline,
    });
    Ok(PipelineOutput { split, run, report })
}
