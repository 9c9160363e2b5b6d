//! Tabular dataset ingestion and stratified train/test splitting.
//!
//! Categorical columns are ordinal-encoded by first appearance so the
//! chromosome length equals the raw column count. Rows with a missing cell are
//! dropped and counted.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::DataError;

/// Cell values treated as missing (compared after trimming).
const MISSING_TOKENS: [&str; 3] = ["", "?", "NA"];

/// Default holdout fraction for [`stratified_split`].
pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    /// Ordinal codes `0..levels.len()`, levels in first-appearance order.
    Categorical { levels: Vec<String> },
}

impl ColumnKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }

    pub fn level_count(&self) -> Option<usize> {
        match self {
            ColumnKind::Categorical { levels } => Some(levels.len()),
            ColumnKind::Numeric => None,
        }
    }
}

/// A binary classification dataset with a designated sensitive attribute.
///
/// The sensitive column stays among the features and is therefore selectable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    /// Row-major `n × m` values.
    values: Vec<f64>,
    pub target: Vec<u8>,
    pub sensitive_index: usize,
    pub sensitive_groups: Vec<u32>,
    pub column_kinds: Vec<ColumnKind>,
    pub target_name: String,
    pub positive_label: String,
    pub dropped_rows: usize,
}

/// Identifies the data a run was computed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub column_hash: String,
}

impl Dataset {
    /// Builds a dataset from already-encoded parts, checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        values: Vec<f64>,
        target: Vec<u8>,
        sensitive_index: usize,
        sensitive_groups: Vec<u32>,
        column_kinds: Vec<ColumnKind>,
        target_name: impl Into<String>,
        positive_label: impl Into<String>,
    ) -> Result<Self, DataError> {
        let m = feature_names.len();
        let n = target.len();
        if m < 2 {
            return Err(DataError::TooFewFeatures(m));
        }
        if n == 0 {
            return Err(DataError::Empty);
        }
        if values.len() != n * m || column_kinds.len() != m || sensitive_groups.len() != n {
            return Err(DataError::Shape(format!(
                "{} values, {} kinds and {} groups for {n} rows × {m} columns",
                values.len(),
                column_kinds.len(),
                sensitive_groups.len()
            )));
        }
        if sensitive_index >= m {
            return Err(DataError::Shape(format!(
                "sensitive index {sensitive_index} out of range for {m} columns"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Shape("non-finite feature value".into()));
        }
        if target.iter().any(|&t| t > 1) {
            return Err(DataError::Shape("target labels must be 0 or 1".into()));
        }
        if !target.contains(&0) || !target.contains(&1) {
            return Err(DataError::SingleClass);
        }
        let distinct_groups: BTreeSet<u32> = sensitive_groups.iter().copied().collect();
        if distinct_groups.len() < 2 {
            return Err(DataError::SingleGroup);
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            values,
            target,
            sensitive_index,
            sensitive_groups,
            column_kinds,
            target_name: target_name.into(),
            positive_label: positive_label.into(),
            dropped_rows: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_features() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.n_features();
        &self.values[row * m..(row + 1) * m]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows()).map(move |r| self.value(r, col))
    }

    pub fn sensitive_name(&self) -> &str {
        &self.feature_names[self.sensitive_index]
    }

    /// Stable content hash over names, kinds, values, target and groups.
    pub fn fingerprint(&self) -> DatasetFingerprint {
        let mut hasher = Sha256::new();
        for name in &self.feature_names {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update(serde_json::to_vec(&self.column_kinds).unwrap_or_default());
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(&self.target);
        for g in &self.sensitive_groups {
            hasher.update(g.to_le_bytes());
        }
        hasher.update((self.sensitive_index as u64).to_le_bytes());
        DatasetFingerprint {
            name: self.name.clone(),
            m: self.n_features(),
            n: self.n_rows(),
            column_hash: hex::encode(hasher.finalize()),
        }
    }
}

/// Column and label designations for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSpec {
    pub target: String,
    pub sensitive: String,
    pub positive_label: String,
}

pub fn load_csv(path: impl AsRef<Path>, spec: &CsvSpec) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_csv(file, &name, spec)
}

/// Parses RFC 4180 CSV with a header row.
pub fn read_csv<R: Read>(reader: R, name: &str, spec: &CsvSpec) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::Empty);
    }
    let find = |col: &str| {
        header
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| DataError::MissingColumn(col.to_string()))
    };
    let target_col = find(&spec.target)?;
    let sensitive_col = find(&spec.sensitive)?;
    if sensitive_col == target_col {
        return Err(DataError::Shape(
            "sensitive column must differ from the target column".into(),
        ));
    }

    let width = header.len();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    let mut seen_any = false;
    for record in rdr.records() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        seen_any = true;
        let cells: Vec<String> = record.iter().map(|c| c.trim().to_string()).collect();
        if cells.len() != width || cells.iter().any(|c| MISSING_TOKENS.contains(&c.as_str())) {
            dropped += 1;
            continue;
        }
        rows.push(cells);
    }
    if !seen_any {
        return Err(DataError::Empty);
    }
    if rows.is_empty() {
        return Err(DataError::AllRowsDropped(dropped));
    }
    if dropped > 0 {
        log::warn!("{name}: dropped {dropped} row(s) with missing cells");
    }

    let distinct_targets: BTreeSet<&str> = rows.iter().map(|r| r[target_col].as_str()).collect();
    if distinct_targets.len() != 2 {
        return Err(DataError::TargetNotBinary {
            column: spec.target.clone(),
            distinct: distinct_targets.len(),
        });
    }
    if !distinct_targets.contains(spec.positive_label.as_str()) {
        return Err(DataError::UnknownPositiveLabel(spec.positive_label.clone()));
    }
    let target: Vec<u8> = rows
        .iter()
        .map(|r| u8::from(r[target_col] == spec.positive_label))
        .collect();

    let feature_cols: Vec<usize> = (0..width).filter(|&c| c != target_col).collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let m = feature_cols.len();
    let n = rows.len();
    let mut values = vec![0.0; n * m];
    let mut kinds = Vec::with_capacity(m);
    for (j, &c) in feature_cols.iter().enumerate() {
        let parsed: Option<Vec<f64>> = rows
            .iter()
            .map(|r| r[c].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(nums) => {
                for (i, v) in nums.into_iter().enumerate() {
                    values[i * m + j] = v;
                }
                kinds.push(ColumnKind::Numeric);
            }
            None => {
                let (codes, levels) = encode_first_appearance(rows.iter().map(|r| r[c].as_str()));
                for (i, code) in codes.into_iter().enumerate() {
                    values[i * m + j] = code as f64;
                }
                kinds.push(ColumnKind::Categorical { levels });
            }
        }
    }

    let (groups, _) = encode_first_appearance(rows.iter().map(|r| r[sensitive_col].as_str()));
    let sensitive_index = feature_cols
        .iter()
        .position(|&c| c == sensitive_col)
        .expect("sensitive column is a feature column");

    let mut ds = Dataset::new(
        name,
        feature_names,
        values,
        target,
        sensitive_index,
        groups,
        kinds,
        spec.target.clone(),
        spec.positive_label.clone(),
    )?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

fn encode_first_appearance<'a>(cells: impl Iterator<Item = &'a str>) -> (Vec<u32>, Vec<String>) {
    let mut lookup: HashMap<&'a str, u32> = HashMap::new();
    let mut levels = Vec::new();
    let codes = cells
        .map(|cell| {
            *lookup.entry(cell).or_insert_with(|| {
                levels.push(cell.to_string());
                (levels.len() - 1) as u32
            })
        })
        .collect();
    (codes, levels)
}

/// Disjoint, exhaustive row partition. Both index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffled holdout. Each class contributes `round(count × fraction)`
/// test rows, clamped so both partitions keep at least one row of the class.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<Split, DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.target[i] == class).collect();
        if idx.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                rows: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
