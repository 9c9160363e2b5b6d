//! Objective matrices supplied as CSV.
//!
//! One header line, then one row per solution: six objective columns in the
//! fixed order, optionally preceded by a label column.

use std::path::Path;

use mofs_core::interpret::ObjectiveMatrix;
use mofs_core::objectives::N_OBJECTIVES;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledMatrix {
    pub labels: Vec<String>,
    pub matrix: ObjectiveMatrix,
}

pub fn parse_matrix(text: &str) -> Result<LabelledMatrix, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let line = i + 2;
        let (label, values) = match record.len() {
            N_OBJECTIVES => (format!("soln{}", i + 1), record.iter().collect::<Vec<_>>()),
            n if n == N_OBJECTIVES + 1 => (record[0].to_string(), record.iter().skip(1).collect()),
            n => return Err(format!("line {line}: expected {N_OBJECTIVES} objective columns, found {n} fields")),
        };
        let mut row = [0.0; N_OBJECTIVES];
        for (slot, raw) in row.iter_mut().zip(values) {
            *slot = raw.parse().map_err(|_| format!("line {line}: '{raw}' is not a number"))?;
        }
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("matrix has no rows".into());
    }
    let matrix = ObjectiveMatrix::from_rows(rows).map_err(|e| e.to_string())?;
    Ok(LabelledMatrix { labels, matrix })
}

pub fn load_matrix(path: &Path) -> Result<LabelledMatrix, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_matrix(&text)
}
