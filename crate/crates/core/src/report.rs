//! The interpretation report: one JSON document combining clustering,
//! weighting, ranking, frequency, contribution and sensitivity for a front.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::InterpretError;
use crate::interpret::{
    cluster_solutions, compare_weight_schemes, compute_weights, feature_contribution, objective_matrix,
    topsis_rank, ClusterK, ContributionOptions, RankingResult, SensitivityTable, WeightScheme,
    WeightVector,
};
use crate::mask::FeatureMask;
use crate::moea::{RunProvenance, SolutionSet};
use crate::objectives::{ObjectiveVector, DIRECTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub clusters: ClusterK,
    /// Scheme behind the reported ranks and the contribution reference.
    pub scheme: WeightScheme,
    /// Schemes compared in the sensitivity table.
    pub compare: Vec<WeightScheme>,
    pub contribution: ContributionOptions,
    /// Seeds clustering.
    pub seed: u64,
    /// Solution ids excluded from weighting, ranking and frequency.
    pub discarded: BTreeSet<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            clusters: ClusterK::default(),
            scheme: WeightScheme::RangeOverStd,
            compare: WeightScheme::presets(),
            contribution: ContributionOptions::default(),
            seed: 0,
            discarded: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub id: usize,
    pub mask: FeatureMask,
    pub features: Vec<String>,
    pub objectives: ObjectiveVector,
    pub cluster: usize,
    pub pca: [f64; 2],
    /// TOPSIS score; absent for discarded solutions.
    pub ps: Option<f64>,
    pub rank: Option<usize>,
    pub discarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elbow {
    pub k: usize,
    pub wcss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroids: Vec<[f64; 6]>,
    pub pca_explained: [f64; 2],
    pub pca_components: [[f64; 6]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionEntry {
    pub solution_id: usize,
    pub values: Vec<f64>,
    pub samples: usize,
    pub eval_rows: usize,
}

/// The model on all features except the sensitive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mask: FeatureMask,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretSettings {
    pub cluster_space: String,
    pub kmeans_restarts: usize,
    pub clusters_requested: ClusterK,
    pub entropy_cost_columns_flipped: bool,
    pub topsis_normalization: String,
    pub contribution_method: String,
    pub contribution_scale: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub run: RunProvenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    pub interpretation: InterpretSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationReport {
    pub feature_names: Vec<String>,
    pub solutions: Vec<SolutionEntry>,
    pub clusters: ClusterSummary,
    pub elbow: Elbow,
    pub weights: WeightVector,
    pub ranking: RankingResult,
    /// Selection count per feature over the non-discarded solutions.
    pub frequency: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution: Option<ContributionEntry>,
    pub sensitivity: SensitivityTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Baseline>,
    /// Fallbacks taken while building the report.
    pub notes: Vec<String>,
    pub provenance: ReportProvenance,
}

impl InterpretationReport {
    pub fn solution(&self, id: usize) -> Option<&SolutionEntry> {
        self.solutions.iter().find(|s| s.id == id)
    }

    /// Non-discarded solutions from best to worst.
    pub fn ranked(&self) -> Vec<&SolutionEntry> {
        self.ranking.order.iter().filter_map(|&id| self.solution(id)).collect()
    }
}

/// Data needed to retrain models for the contribution step.
#[derive(Debug, Clone, Copy)]
pub struct ModelContext<'a> {
    pub dataset: &'a Dataset,
    pub split: &'a Split,
    pub test_fraction: f64,
}

/// Runs the interpretation steps in order: clustering and projection,
/// weighting, ranking, frequency, contribution of the top-ranked solution,
/// and the weight-scheme comparison.
///
/// Without a [`ModelContext`] the contribution step is skipped.
pub fn build_report(
    ss: &SolutionSet,
    feature_names: &[String],
    data: Option<ModelContext<'_>>,
    options: &ReportOptions,
) -> Result<InterpretationReport, InterpretError> {
    let full = objective_matrix(ss, ss.provenance.vif_cap)?;
    if let Some(&bad) = options.discarded.iter().find(|&&id| id >= ss.len()) {
        return Err(InterpretError::UnknownSolution(bad));
    }
    let active = full.filter(|id| !options.discarded.contains(&id));
    if active.is_empty() {
        return Err(InterpretError::Empty);
    }
    let mut notes = Vec::new();

    let requested = match options.clusters {
        ClusterK::Fixed(k) if k > full.len() => {
            notes.push(format!("requested {k} clusters for {} solutions; using {}", full.len(), full.len()));
            ClusterK::Fixed(full.len())
        }
        other => other,
    };
    let clusters = cluster_solutions(&full, requested, options.seed)?;

    let weights = match compute_weights(&active, &DIRECTIONS, &options.scheme) {
        Ok(w) => w,
        Err(e) => {
            notes.push(format!("{} weights unavailable ({e}); using equal weights", options.scheme));
            compute_weights(&active, &DIRECTIONS, &WeightScheme::Equal)?
        }
    };
    let ranking = topsis_rank(&active, &DIRECTIONS, &weights)?;

    let mut frequency = vec![0; feature_names.len()];
    for (id, s) in ss.solutions.iter().enumerate() {
        if !options.discarded.contains(&id) {
            for i in s.mask.indices() {
                frequency[i] += 1;
            }
        }
    }

    let contribution = match data {
        Some(ctx) => {
            let best = ranking.order[0];
            let c = feature_contribution(
                ctx.dataset,
                ctx.split,
                &ss.solutions[best].mask,
                ss.provenance.classifier,
                &options.contribution,
            )?;
            Some(ContributionEntry {
                solution_id: best,
                values: c.values,
                samples: c.samples,
                eval_rows: c.eval_rows,
            })
        }
        None => None,
    };

    let usable: Vec<WeightScheme> = options
        .compare
        .iter()
        .filter(|s| match compute_weights(&active, &DIRECTIONS, s) {
            Ok(_) => true,
            Err(e) => {
                notes.push(format!("{s} dropped from the sensitivity table ({e})"));
                false
            }
        })
        .cloned()
        .collect();
    let sensitivity = if usable.is_empty() {
        compare_weight_schemes(&active, &DIRECTIONS, &[WeightScheme::Equal])?
    } else {
        compare_weight_schemes(&active, &DIRECTIONS, &usable)?
    };

    let solutions = ss
        .solutions
        .iter()
        .enumerate()
        .map(|(id, s)| SolutionEntry {
            id,
            mask: s.mask.clone(),
            features: s.mask.indices().into_iter().map(|i| feature_names[i].clone()).collect(),
            objectives: s.objectives,
            cluster: clusters.labels[id],
            pca: clusters.pca_coords[id],
            ps: ranking.score_of(id),
            rank: ranking.rank_of(id),
            discarded: options.discarded.contains(&id),
        })
        .collect();

    let mut run = ss.provenance.clone();
    run.wall_time_ms = None;
    Ok(InterpretationReport {
        feature_names: feature_names.to_vec(),
        solutions,
        clusters: ClusterSummary {
            centroids: clusters.centroids,
            pca_explained: clusters.pca_explained,
            pca_components: clusters.pca_components,
        },
        elbow: Elbow {
            k: clusters.chosen_k,
            wcss: clusters.wcss_by_k,
        },
        weights,
        ranking,
        frequency,
        contribution,
        sensitivity,
        baseline: None,
        notes,
        provenance: ReportProvenance {
            run,
            test_fraction: data.map(|d| d.test_fraction),
            interpretation: InterpretSettings {
                cluster_space: "standardized_objectives".into(),
                kmeans_restarts: crate::interpret::cluster::KMEANS_RESTARTS,
                clusters_requested: options.clusters,
                entropy_cost_columns_flipped: true,
                topsis_normalization: "vector".into(),
                contribution_method: "monte_carlo_shapley".into(),
                contribution_scale: "log_odds".into(),
                seed: options.seed,
            },
        },
    })
}

