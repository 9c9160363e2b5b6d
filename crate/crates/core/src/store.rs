//! File-backed persistence for datasets, runs, reports and final choices.
//!
//! Layout under the root directory:
//!
//! ```text
//! index.json                  run ids in creation order
//! runs/<run_id>/record.json
//! runs/<run_id>/report.json
//! datasets/<id>/data.csv      uploaded bytes, verbatim
//! datasets/<id>/meta.json
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! reader never sees a partial document. Updates to one run are serialized by
//! a per-run lock.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{read_csv, CsvSpec, Dataset, DatasetFingerprint};
use crate::error::{ConfigError, DataError};
use crate::moea::{GaConfig, Progress, SolutionSet};
use crate::pipeline::PipelineConfig;
use crate::report::InterpretationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl RunStatus {
    fn can_become(self, next: RunStatus) -> bool {
        matches!(
            (self, next),
            (RunStatus::Pending, RunStatus::Running)
                | (RunStatus::Running, RunStatus::Done)
                | (RunStatus::Running, RunStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalChoice {
    pub solution_id: usize,
    /// Seconds since the Unix epoch.
    pub chosen_at: u64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub status: RunStatus,
    pub created_at: u64,
    pub dataset_id: Option<String>,
    pub dataset: DatasetFingerprint,
    pub config: PipelineConfig,
    pub ga: GaConfig,
    pub progress: Progress,
    pub solutions: Option<SolutionSet>,
    pub error: Option<String>,
    pub final_choice: Option<FinalChoice>,
    /// Every committed choice, oldest first.
    pub choice_history: Vec<FinalChoice>,
    pub discarded: BTreeSet<usize>,
}

impl RunRecord {
    pub fn solution_count(&self) -> Option<usize> {
        self.solutions.as_ref().map(|s| s.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub dataset_id: String,
    pub spec: CsvSpec,
    pub fingerprint: DatasetFingerprint,
    pub feature_names: Vec<String>,
    pub dropped_rows: usize,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("storage error: {0}")]
    Io(String),
    #[error("stored document is unreadable: {0}")]
    Corrupt(String),
    #[error("run not found: {0}")]
    RunNotFound(String),
    #[error("dataset not found: {0}")]
    DatasetNotFound(String),
    #[error("run status cannot change from {from:?} to {to:?}")]
    BadTransition { from: RunStatus, to: RunStatus },
    #[error("run is {0:?}; this needs a finished run")]
    NotReady(RunStatus),
    #[error("solution {0} does not exist in this run")]
    UnknownSolution(usize),
    #[error("solution {0} has been discarded")]
    DiscardedSolution(usize),
    #[error("solution {0} is the committed final choice and cannot be discarded")]
    ChosenSolution(usize),
    #[error("discarding would leave no solutions")]
    NothingLeft,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.{}.tmp", new_id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| StoreError::Corrupt(e.to_string()))?;
    bytes.push(b'\n');
    Ok(write_atomic(path, &bytes)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))
}

/// Ids become path components, so only accept what we generate.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

#[derive(Debug)]
pub struct FileStore {
    root: PathBuf,
    run_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    index_lock: Mutex<()>,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("runs"))?;
        fs::create_dir_all(root.join("datasets"))?;
        Ok(Self {
            root,
            run_locks: Mutex::new(HashMap::new()),
            index_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn run_dir(&self, id: &str) -> PathBuf {
        self.root.join("runs").join(id)
    }

    fn dataset_dir(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(id)
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.run_locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    pub fn register_dataset(&self, name: &str, csv: &[u8], spec: &CsvSpec) -> Result<(DatasetEntry, Dataset), StoreError> {
        let ds = read_csv(csv, name, spec)?;
        let dataset_id = new_id();
        let entry = DatasetEntry {
            dataset_id: dataset_id.clone(),
            spec: spec.clone(),
            fingerprint: ds.fingerprint(),
            feature_names: ds.feature_names.clone(),
            dropped_rows: ds.dropped_rows,
            created_at: unix_now(),
        };
        let dir = self.dataset_dir(&dataset_id);
        write_atomic(&dir.join("data.csv"), csv)?;
        write_json(&dir.join("meta.json"), &entry)?;
        Ok((entry, ds))
    }

    pub fn dataset_entry(&self, id: &str) -> Result<DatasetEntry, StoreError> {
        let path = self.dataset_dir(id).join("meta.json");
        if !valid_id(id) || !path.exists() {
            return Err(StoreError::DatasetNotFound(id.to_string()));
        }
        read_json(&path)
    }

    pub fn load_dataset(&self, id: &str) -> Result<(DatasetEntry, Dataset), StoreError> {
        let entry = self.dataset_entry(id)?;
        let bytes = fs::read(self.dataset_dir(id).join("data.csv"))?;
        let ds = read_csv(bytes.as_slice(), &entry.fingerprint.name, &entry.spec)?;
        Ok((entry, ds))
    }

    /// Persists a new `Pending` run after validating its configuration
    /// against the dataset width.
    pub fn create(
        &self,
        config: PipelineConfig,
        dataset_id: Option<String>,
        dataset: DatasetFingerprint,
    ) -> Result<RunRecord, StoreError> {
        config.validate(dataset.m)?;
        let record = RunRecord {
            run_id: new_id(),
            status: RunStatus::Pending,
            created_at: unix_now(),
            dataset_id,
            ga: config.ga_config(dataset.m),
            progress: Progress {
                evaluations_done: 0,
                max_evaluations: config.ga_config(dataset.m).max_evaluations,
                generation: 0,
            },
            dataset,
            config,
            solutions: None,
            error: None,
            final_choice: None,
            choice_history: Vec::new(),
            discarded: BTreeSet::new(),
        };
        write_json(&self.run_dir(&record.run_id).join("record.json"), &record)?;
        let _guard = self.index_lock.lock().expect("index lock poisoned");
        let mut ids = self.list()?;
        ids.push(record.run_id.clone());
        write_json(&self.root.join("index.json"), &ids)?;
        Ok(record)
    }

    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let path = self.root.join("index.json");
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_json(&path)
    }

    pub fn get(&self, id: &str) -> Result<RunRecord, StoreError> {
        let path = self.run_dir(id).join("record.json");
        if !valid_id(id) || !path.exists() {
            return Err(StoreError::RunNotFound(id.to_string()));
        }
        read_json(&path)
    }

    /// Read-modify-write under the run's exclusive lock. Nothing is written
    /// when `f` fails.
    pub fn update(
        &self,
        id: &str,
        f: impl FnOnce(&mut RunRecord) -> Result<(), StoreError>,
    ) -> Result<RunRecord, StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().expect("run lock poisoned");
        let mut record = self.get(id)?;
        f(&mut record)?;
        write_json(&self.run_dir(id).join("record.json"), &record)?;
        Ok(record)
    }

    pub fn set_status(&self, id: &str, status: RunStatus) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            if !r.status.can_become(status) {
                return Err(StoreError::BadTransition { from: r.status, to: status });
            }
            r.status = status;
            Ok(())
        })
    }

    pub fn set_progress(&self, id: &str, progress: Progress) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            if progress.evaluations_done >= r.progress.evaluations_done {
                r.progress = progress;
            }
            Ok(())
        })
    }

    pub fn save_front(&self, id: &str, front: SolutionSet) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            if r.status != RunStatus::Running {
                return Err(StoreError::BadTransition {
                    from: r.status,
                    to: RunStatus::Done,
                });
            }
            r.progress.evaluations_done = front.evaluation_count();
            r.solutions = Some(front);
            Ok(())
        })
    }

    /// Marks a running run failed, keeping a partial front when one exists.
    pub fn fail(&self, id: &str, message: String, partial: Option<SolutionSet>) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            if !r.status.can_become(RunStatus::Failed) {
                return Err(StoreError::BadTransition {
                    from: r.status,
                    to: RunStatus::Failed,
                });
            }
            r.status = RunStatus::Failed;
            r.error = Some(message);
            if partial.is_some() {
                r.solutions = partial;
            }
            Ok(())
        })
    }

    pub fn save_report(&self, id: &str, report: &InterpretationReport) -> Result<(), StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().expect("run lock poisoned");
        if !self.run_dir(id).join("record.json").exists() {
            return Err(StoreError::RunNotFound(id.to_string()));
        }
        write_json(&self.run_dir(id).join("report.json"), report)
    }

    pub fn load_report(&self, id: &str) -> Result<Option<InterpretationReport>, StoreError> {
        let record = self.get(id)?;
        let path = self.run_dir(&record.run_id).join("report.json");
        if !path.exists() {
            return Ok(None);
        }
        read_json(&path).map(Some)
    }

    /// Adds `ids` to the discarded set.
    pub fn discard_solutions(&self, id: &str, ids: &[usize]) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            let total = finished_solutions(r)?;
            for &s in ids {
                if s >= total {
                    return Err(StoreError::UnknownSolution(s));
                }
                if r.final_choice.as_ref().is_some_and(|c| c.solution_id == s) {
                    return Err(StoreError::ChosenSolution(s));
                }
            }
            let mut next = r.discarded.clone();
            next.extend(ids.iter().copied());
            if next.len() >= total {
                return Err(StoreError::NothingLeft);
            }
            r.discarded = next;
            Ok(())
        })
    }

    /// Commits (or replaces) the final choice; the history keeps every commit.
    pub fn set_final_choice(&self, id: &str, solution_id: usize, note: String) -> Result<RunRecord, StoreError> {
        self.update(id, |r| {
            let total = finished_solutions(r)?;
            if solution_id >= total {
                return Err(StoreError::UnknownSolution(solution_id));
            }
            if r.discarded.contains(&solution_id) {
                return Err(StoreError::DiscardedSolution(solution_id));
            }
            let choice = FinalChoice {
                solution_id,
                chosen_at: unix_now(),
                note,
            };
            r.choice_history.push(choice.clone());
            r.final_choice = Some(choice);
            Ok(())
        })
    }
}

fn finished_solutions(r: &RunRecord) -> Result<usize, StoreError> {
    match (&r.status, &r.solutions) {
        (RunStatus::Done, Some(ss)) => Ok(ss.len()),
        _ => Err(StoreError::NotReady(r.status)),
    }
}
