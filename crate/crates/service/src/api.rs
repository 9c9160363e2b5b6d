//! Endpoint handlers and their request/response shapes.

use std::collections::BTreeSet;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Multipart, Path, Request, State};
use axum::http::StatusCode;
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mofs_core::data::DatasetFingerprint;
use mofs_core::interpret::{
    compute_weights, objective_matrix, topsis_rank, ClusterK, RankingResult, WeightScheme,
};
use mofs_core::moea::{GaConfig, Progress, RunProvenance};
use mofs_core::pipeline::{GaOverrides, PipelineConfig};
use mofs_core::report::InterpretationReport;
use mofs_core::store::{FinalChoice, RunRecord, RunStatus, StoreError};
use mofs_core::{ClassifierKind, CsvSpec, FeatureMask, ObjectiveVector, DIRECTIONS};

use crate::error::{ApiError, ErrorCode};
use crate::worker;
use crate::AppState;

/// `Json` whose rejections use the service error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(r: JsonRejection) -> ApiError {
    ApiError::bad_request(r.body_text())
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker task failed: {e}")))?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

pub async fn health() -> Json<Health> {
    Json(Health { status: "ok".into() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCreated {
    pub dataset_id: String,
    pub m: usize,
    pub n: usize,
    pub feature_names: Vec<String>,
    pub sensitive: String,
    pub dropped_rows: usize,
}

/// Multipart fields: `file` (the CSV), `target`, `sensitive`, `positive_label`.
pub async fn create_dataset(
    State(state): State<AppState>,
    mut multipart: Multipart,
) -> ApiResult<(StatusCode, Json<DatasetCreated>)> {
    let mut file: Option<(String, Vec<u8>)> = None;
    let (mut target, mut sensitive, mut positive) = (None, None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("malformed multipart body: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" => {
                let filename = field.file_name().unwrap_or("dataset.csv").to_string();
                let bytes = field
                    .bytes()
                    .await
                    .map_err(|e| ApiError::bad_request(format!("could not read upload: {e}")))?;
                file = Some((filename, bytes.to_vec()));
            }
            "target" | "sensitive" | "positive_label" => {
                let text = field
                    .text()
                    .await
                    .map_err(|e| ApiError::bad_request(format!("could not read field {name}: {e}")))?;
                let slot = match name.as_str() {
                    "target" => &mut target,
                    "sensitive" => &mut sensitive,
                    _ => &mut positive,
                };
                *slot = Some(text.trim().to_string());
            }
            _ => {}
        }
    }
    let missing = |what: &str| ApiError::bad_request(format!("missing multipart field '{what}'"));
    let (filename, bytes) = file.ok_or_else(|| missing("file"))?;
    let spec = CsvSpec {
        target: target.ok_or_else(|| missing("target"))?,
        sensitive: sensitive.ok_or_else(|| missing("sensitive"))?,
        positive_label: positive.ok_or_else(|| missing("positive_label"))?,
    };
    let name = filename.strip_suffix(".csv").unwrap_or(&filename).to_string();
    let store = state.store.clone();
    let (entry, ds) = blocking(move || Ok(store.register_dataset(&name, &bytes, &spec)?)).await?;
    Ok((
        StatusCode::CREATED,
        Json(DatasetCreated {
            dataset_id: entry.dataset_id,
            m: ds.n_features(),
            n: ds.n_rows(),
            feature_names: ds.feature_names.clone(),
            sensitive: ds.sensitive_name().to_string(),
            dropped_rows: ds.dropped_rows,
        }),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRun {
    pub dataset_id: String,
    #[serde(default)]
    pub classifier: Option<ClassifierKind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub test_fraction: Option<f64>,
    #[serde(default)]
    pub vif_cap: Option<f64>,
    #[serde(default)]
    pub overrides: GaOverrides,
    #[serde(default)]
    pub clusters: Option<ClusterK>,
    #[serde(default)]
    pub scheme: Option<WeightScheme>,
    #[serde(default)]
    pub contribution_samples: Option<usize>,
}

impl CreateRun {
    fn pipeline_config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        if let Some(k) = self.classifier {
            cfg.classifier = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.test_fraction {
            cfg.test_fraction = f;
        }
        if let Some(v) = self.vif_cap {
            cfg.vif_cap = v;
        }
        cfg.ga = self.overrides.clone();
        if let Some(k) = self.clusters {
            cfg.report.clusters = k;
        }
        if let Some(s) = &self.scheme {
            cfg.report.scheme = s.clone();
        }
        if let Some(n) = self.contribution_samples {
            cfg.report.contribution.samples = n;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCreated {
    pub run_id: String,
    pub status: RunStatus,
    pub max_evaluations: usize,
}

pub async fn create_run(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateRun>,
) -> ApiResult<(StatusCode, Json<RunCreated>)> {
    let cfg = req.pipeline_config();
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(ApiError::new(
            ErrorCode::InvalidConfig,
            format!("test_fraction must lie in (0, 1), got {}", cfg.test_fraction),
        ));
    }
    if cfg.report.contribution.samples == 0 {
        return Err(ApiError::new(ErrorCode::InvalidConfig, "contribution_samples must be at least 1"));
    }
    let store = state.store.clone();
    let record = blocking(move || {
        let entry = store.dataset_entry(&req.dataset_id)?;
        Ok(store.create(cfg, Some(entry.dataset_id), entry.fingerprint)?)
    })
    .await?;
    worker::spawn_run(state.store.clone(), state.pool.clone(), record.run_id.clone());
    Ok((
        StatusCode::ACCEPTED,
        Json(RunCreated {
            run_id: record.run_id,
            status: record.status,
            max_evaluations: record.ga.max_evaluations,
        }),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunView {
    pub run_id: String,
    pub status: RunStatus,
    pub created_at: u64,
    pub dataset_id: Option<String>,
    pub dataset: DatasetFingerprint,
    pub config: PipelineConfig,
    pub ga: GaConfig,
    pub progress: Progress,
    /// Number of solutions on the front, once known.
    pub solutions: Option<usize>,
    pub error: Option<String>,
    pub final_choice: Option<FinalChoice>,
    pub choice_history_len: usize,
    pub discarded: BTreeSet<usize>,
}

impl From<RunRecord> for RunView {
    fn from(r: RunRecord) -> Self {
        Self {
            solutions: r.solution_count(),
            choice_history_len: r.choice_history.len(),
            run_id: r.run_id,
            status: r.status,
            created_at: r.created_at,
            dataset_id: r.dataset_id,
            dataset: r.dataset,
            config: r.config,
            ga: r.ga,
            progress: r.progress,
            error: r.error,
            final_choice: r.final_choice,
            discarded: r.discarded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub status: RunStatus,
    pub progress: Progress,
}

pub async fn list_runs(State(state): State<AppState>) -> ApiResult<Json<Vec<RunSummary>>> {
    let store = state.store.clone();
    blocking(move || {
        let mut out = Vec::new();
        for id in store.list()? {
            let r = store.get(&id)?;
            out.push(RunSummary {
                run_id: r.run_id,
                status: r.status,
                progress: r.progress,
            });
        }
        Ok(Json(out))
    })
    .await
}

pub async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RunView>> {
    let store = state.store.clone();
    blocking(move || Ok(Json(store.get(&id)?.into()))).await
}

fn require_done(r: &RunRecord) -> ApiResult<()> {
    if r.status == RunStatus::Done && r.solutions.is_some() {
        Ok(())
    } else {
        Err(StoreError::NotReady(r.status).into())
    }
}

pub async fn get_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<InterpretationReport>> {
    let store = state.store.clone();
    blocking(move || {
        require_done(&store.get(&id)?)?;
        store
            .load_report(&id)?
            .map(Json)
            .ok_or_else(|| ApiError::internal(format!("run {id} is done but has no report")))
    })
    .await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankRequest {
    /// `equal`, `rstd` or `entropy`; ignored when `custom_weights` is given.
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub custom_weights: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub exclude_discarded: bool,
}

fn default_true() -> bool {
    true
}

/// Stateless TOPSIS over the run's front; the stored report is untouched.
pub async fn rank(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<RankRequest>,
) -> ApiResult<Json<RankingResult>> {
    let scheme = match (&req.custom_weights, &req.scheme) {
        (Some(w), _) => WeightScheme::Custom(w.clone()),
        (None, Some(name)) => name
            .parse::<WeightScheme>()
            .map_err(|e| ApiError::new(ErrorCode::InvalidWeights, e))?,
        (None, None) => WeightScheme::RangeOverStd,
    };
    let store = state.store.clone();
    blocking(move || {
        let record = store.get(&id)?;
        require_done(&record)?;
        let ss = record.solutions.as_ref().expect("checked by require_done");
        let matrix = objective_matrix(ss, ss.provenance.vif_cap)?;
        let matrix = if req.exclude_discarded {
            matrix.filter(|i| !record.discarded.contains(&i))
        } else {
            matrix
        };
        let weights = compute_weights(&matrix, &DIRECTIONS, &scheme)?;
        Ok(Json(topsis_rank(&matrix, &DIRECTIONS, &weights)?))
    })
    .await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscardRequest {
    pub solution_ids: Vec<usize>,
}

/// Marks solutions discarded and rebuilds the stored report without them.
pub async fn discard(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<DiscardRequest>,
) -> ApiResult<Json<RunView>> {
    let store = state.store.clone();
    blocking(move || {
        let record = store.discard_solutions(&id, &req.solution_ids)?;
        worker::rebuild_report(&store, &record)?;
        Ok(Json(record.into()))
    })
    .await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalRequest {
    pub solution_id: usize,
    #[serde(default)]
    pub note: String,
}

pub async fn final_choice(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<FinalRequest>,
) -> ApiResult<Json<RunView>> {
    let store = state.store.clone();
    blocking(move || Ok(Json(store.set_final_choice(&id, req.solution_id, req.note)?.into()))).await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Export {
    pub run_id: String,
    pub solution_id: usize,
    pub feature_names: Vec<String>,
    pub mask: FeatureMask,
    pub objectives: ObjectiveVector,
    pub note: String,
    pub chosen_at: u64,
    pub provenance: RunProvenance,
}

pub async fn export(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Export>> {
    let store = state.store.clone();
    blocking(move || {
        let record = store.get(&id)?;
        require_done(&record)?;
        let choice = record
            .final_choice
            .clone()
            .ok_or_else(|| ApiError::new(ErrorCode::NotReady, "no final choice has been committed"))?;
        let ss = record.solutions.as_ref().expect("checked by require_done");
        let solution = &ss.solutions[choice.solution_id];
        let names = match &record.dataset_id {
            Some(d) => store.dataset_entry(d)?.feature_names,
            None => store.load_report(&id)?.map(|r| r.feature_names).unwrap_or_default(),
        };
        Ok(Json(Export {
            run_id: record.run_id.clone(),
            solution_id: choice.solution_id,
            feature_names: solution.mask.indices().into_iter().filter_map(|i| names.get(i).cloned()).collect(),
            mask: solution.mask.clone(),
            objectives: solution.objectives,
            note: choice.note,
            chosen_at: choice.chosen_at,
            provenance: ss.provenance.clone(),
        }))
    })
    .await
}
