//! Background execution of runs on a bounded pool.

use std::sync::Arc;

use tokio::sync::Semaphore;

use mofs_core::moea::RunError;
use mofs_core::pipeline::{run_pipeline, PipelineError};
use mofs_core::report::{build_report, ModelContext};
use mofs_core::store::{FileStore, RunRecord, RunStatus, StoreError};
use mofs_core::{stratified_split, Dataset};

/// Queues the run; it stays `Pending` until a pool slot frees up.
pub fn spawn_run(store: Arc<FileStore>, pool: Arc<Semaphore>, run_id: String) {
    tokio::spawn(async move {
        let Ok(_permit) = pool.acquire_owned().await else {
            return;
        };
        let id = run_id.clone();
        let result = tokio::task::spawn_blocking(move || execute(&store, &id)).await;
        match result {
            Ok(Ok(())) => log::info!("run {run_id} finished"),
            Ok(Err(e)) => log::warn!("run {run_id} failed: {e}"),
            Err(e) => log::error!("run {run_id} worker panicked: {e}"),
        }
    });
}

fn execute(store: &FileStore, run_id: &str) -> Result<(), String> {
    let record = store.set_status(run_id, RunStatus::Running).map_err(|e| e.to_string())?;
    let Some(dataset_id) = record.dataset_id.clone() else {
        let message = "run has no registered dataset".to_string();
        store.fail(run_id, message.clone(), None).map_err(|e| e.to_string())?;
        return Err(message);
    };
    let ds = match store.load_dataset(&dataset_id) {
        Ok((_, ds)) => ds,
        Err(e) => {
            store.fail(run_id, e.to_string(), None).map_err(|e| e.to_string())?;
            return Err(e.to_string());
        }
    };
    let outcome = run_pipeline(&ds, &record.config, |progress| {
        if let Err(e) = store.set_progress(run_id, progress) {
            log::warn!("progress for run {run_id} not saved: {e}");
        }
    });
    match outcome {
        Ok(out) => {
            let saved = store
                .save_front(run_id, out.run.front)
                .and_then(|_| store.save_report(run_id, &out.report))
                .and_then(|_| store.set_status(run_id, RunStatus::Done));
            if let Err(e) = saved {
                let _ = store.fail(run_id, e.to_string(), None);
                return Err(e.to_string());
            }
            Ok(())
        }
        Err(e) => {
            let partial = match &e {
                PipelineError::Run(RunError::Evaluation { partial, .. }) => partial.as_deref().cloned(),
                _ => None,
            };
            store.fail(run_id, e.to_string(), partial).map_err(|e| e.to_string())?;
            Err(e.to_string())
        }
    }
}

/// Rebuilds and stores the report of a finished run using its current
/// discard set; the baseline is carried over from the previous report.
pub fn rebuild_report(store: &FileStore, record: &RunRecord) -> Result<(), crate::ApiError> {
    let ss = record
        .solutions
        .as_ref()
        .ok_or_else(|| crate::ApiError::from(StoreError::NotReady(record.status)))?;
    let dataset: Option<Dataset> = match &record.dataset_id {
        Some(id) => Some(store.load_dataset(id)?.1),
        None => None,
    };
    let cfg = &record.config;
    let mut options = cfg.report.clone();
    options.seed = cfg.seed;
    options.contribution.seed = cfg.seed;
    options.discarded = record.discarded.clone();
    let previous = store.load_report(&record.run_id)?;
    let report = match &dataset {
        Some(ds) => {
            let split = stratified_split(ds, cfg.test_fraction, cfg.seed)?;
            let ctx = ModelContext {
                dataset: ds,
                split: &split,
                test_fraction: cfg.test_fraction,
            };
            build_report(ss, &ds.feature_names, Some(ctx), &options)
        }
        None => {
            let names = previous
                .as_ref()
                .map(|r| r.feature_names.clone())
                .unwrap_or_else(|| (0..ss.provenance.dataset.m).map(|i| format!("x{i}")).collect());
            build_report(ss, &names, None, &options)
        }
    };
    let mut report = report?;
    report.baseline = previous.and_then(|r| r.baseline);
    store.save_report(&record.run_id, &report)?;
    Ok(())
}

/// Startup recovery: runs left `Running` by a previous process are marked
/// failed; `Pending` runs are queued again.
pub fn recover(store: &Arc<FileStore>, pool: &Arc<Semaphore>) -> Result<(), StoreError> {
    for id in store.list()? {
        match store.get(&id)?.status {
            RunStatus::Running => {
                store.fail(&id, "interrupted by service shutdown".into(), None)?;
            }
            RunStatus::Pending => spawn_run(store.clone(), pool.clone(), id),
            RunStatus::Done | RunStatus::Failed => {}
        }
    }
    Ok(())
}
