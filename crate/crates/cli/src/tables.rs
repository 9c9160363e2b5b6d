//! Plain-text tables rendered straight from report values.
//!
//! Numbers use `{}` formatting so every cell parses back to the exact value
//! stored in `report.json`.

use std::fmt::Write;

use mofs_core::interpret::RankingResult;
use mofs_core::objectives::{Objective, N_OBJECTIVES};
use mofs_core::report::InterpretationReport;

/// Left-aligned text grid with two-space gutters.
#[derive(Debug, Default)]
pub struct Grid {
    rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn new(header: Vec<String>) -> Self {
        Self { rows: vec![header] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let cols = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| self.rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            let line: Vec<String> = row.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                out.push_str(&rule.join("  "));
                out.push('\n');
            }
        }
        out
    }
}

fn objective_headers() -> Vec<String> {
    Objective::ALL.iter().map(|o| o.key().to_string()).collect()
}

fn cells(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Ranked solutions with scores and objective values. `labels` maps a
/// solution id to its display name.
pub fn ranking_table(ranking: &RankingResult, rows: &[[f64; N_OBJECTIVES]], labels: &dyn Fn(usize) -> String) -> String {
    let mut header = vec!["rank".to_string(), "solution".into(), "ps".into()];
    header.extend(objective_headers());
    let mut grid = Grid::new(header);
    for &id in &ranking.order {
        let pos = ranking.solution_ids.iter().position(|&s| s == id).expect("ranked id");
        let mut row = vec![ranking.ranks[pos].to_string(), labels(id), ranking.scores[pos].to_string()];
        row.extend(cells(&rows[pos]));
        grid.push(row);
    }
    grid.render()
}

pub fn weights_table(ranking: &RankingResult) -> String {
    let w = &ranking.weights;
    let mut grid = Grid::new(vec!["objective".into(), "weight".into(), "rank".into()]);
    for (j, o) in Objective::ALL.iter().enumerate() {
        grid.push(vec![o.label().to_string(), w.values[j].to_string(), w.ranks[j].to_string()]);
    }
    grid.render()
}

pub fn report_tables(report: &InterpretationReport) -> String {
    let mut out = String::new();
    let ranking = &report.ranking;

    let _ = writeln!(out, "Objective weights ({})\n", ranking.weights.scheme);
    out.push_str(&weights_table(ranking));

    let _ = writeln!(out, "\nSolutions by TOPSIS score\n");
    let rows: Vec<[f64; N_OBJECTIVES]> = ranking
        .solution_ids
        .iter()
        .map(|&id| report.solution(id).expect("ranked solution").objectives.to_array())
        .collect();
    let label = |id: usize| format!("soln{id}");
    out.push_str(&ranking_table(ranking, &rows, &label));

    if let Some(base) = &report.baseline {
        let _ = writeln!(out, "\nBaseline (all features except the sensitive one)\n");
        let mut grid = Grid::new(objective_headers());
        grid.push(cells(&base.objectives.to_array()));
        out.push_str(&grid.render());
    }

    let _ = writeln!(out, "\nClusters (k = {})\n", report.elbow.k);
    let mut header = vec!["solution".to_string(), "cluster".into(), "pc1".into(), "pc2".into(), "features".into()];
    header.push("discarded".into());
    let mut grid = Grid::new(header);
    for s in &report.solutions {
        grid.push(vec![
            label(s.id),
            s.cluster.to_string(),
            s.pca[0].to_string(),
            s.pca[1].to_string(),
            s.features.join(","),
            s.discarded.to_string(),
        ]);
    }
    out.push_str(&grid.render());
    let _ = writeln!(
        out,
        "\nexplained variance: pc1 {} pc2 {}",
        report.clusters.pca_explained[0], report.clusters.pca_explained[1]
    );
    let wcss: Vec<String> = report.elbow.wcss.iter().map(f64::to_string).collect();
    let _ = writeln!(out, "wcss by k: {}", wcss.join(" "));

    let _ = writeln!(out, "\nWeight sensitivity (top {} per scheme)\n", mofs_core::interpret::topsis::SENSITIVITY_TOP);
    let columns = &report.sensitivity.columns;
    let mut header = vec!["position".to_string()];
    header.extend(columns.iter().map(|c| c.scheme.clone()));
    let mut grid = Grid::new(header);
    let depth = columns.iter().map(|c| c.top.len()).max().unwrap_or(0);
    for i in 0..depth {
        let mut row = vec![(i + 1).to_string()];
        row.extend(columns.iter().map(|c| c.top.get(i).map(|&id| label(id)).unwrap_or_default()));
        grid.push(row);
    }
    out.push_str(&grid.render());

    let _ = writeln!(out, "\nFeature usage and contribution\n");
    let mut header = vec!["feature".to_string(), "frequency".into()];
    if let Some(c) = &report.contribution {
        header.push(format!("shapley_{}", label(c.solution_id)));
    }
    let mut grid = Grid::new(header);
    for (i, name) in report.feature_names.iter().enumerate() {
        let mut row = vec![name.clone(), report.frequency[i].to_string()];
        if let Some(c) = &report.contribution {
            row.push(c.values[i].to_string());
        }
        grid.push(row);
    }
    out.push_str(&grid.render());

    for note in &report.notes {
        let _ = writeln!(out, "\nnote: {note}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_aligns_columns() {
        let mut g = Grid::new(vec!["a".into(), "bb".into()]);
        g.push(vec!["ccc".into(), "d".into()]);
        assert_eq!(g.render(), "a    bb\n---  --\nccc  d\n");
    }
}
