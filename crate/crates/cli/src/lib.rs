//! The `mofs` command-line driver: full pipeline runs, re-ranking of saved
//! results, synthetic data and the HTTP service.

pub mod matrix;
pub mod tables;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mofs_core::data::{DatasetFingerprint, DEFAULT_TEST_FRACTION};
use mofs_core::interpret::{compare_weight_schemes, compute_weights, normalize_custom, topsis_rank, ClusterK, ObjectiveMatrix, WeightScheme};
use mofs_core::moea::{GaConfig, SolutionSet};
use mofs_core::objectives::{DEFAULT_VIF_CAP, DIRECTIONS, N_OBJECTIVES};
use mofs_core::pipeline::{run_pipeline, PipelineConfig};
use mofs_core::report::InterpretationReport;
use mofs_core::{load_csv, ClassifierKind, CsvSpec};

#[derive(Debug, Parser)]
#[command(name = "mofs", version, about = "Many-objective feature selection with fairness objectives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for feature subsets and write the interpreted results.
    Run(RunArgs),
    /// Rank solutions from a report or an objective matrix.
    Rank(RankArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Classifier {
    Nb,
    Lr,
}

impl From<Classifier> for ClassifierKind {
    fn from(c: Classifier) -> Self {
        match c {
            Classifier::Nb => ClassifierKind::NaiveBayes,
            Classifier::Lr => ClassifierKind::LogisticRegression,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Equal,
    Rstd,
    Entropy,
    Custom,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub sensitive: String,
    /// Target value treated as the positive class.
    #[arg(long)]
    pub positive: String,
    #[arg(long, value_enum, default_value = "lr")]
    pub classifier: Classifier,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_VIF_CAP)]
    pub vif_cap: f64,
    /// Number of clusters, or `auto` for the elbow rule.
    #[arg(long, default_value = "3")]
    pub clusters: ClusterK,
    #[arg(long, value_enum, default_value = "rstd")]
    pub scheme: Scheme,
    /// Six non-negative weights for `--scheme custom`.
    #[arg(long, num_args = 1..=6, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    /// Monte-Carlo permutations for the contribution estimate.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value = "mofs-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["report", "matrix"]))]
pub struct RankArgs {
    /// A `report.json` written by `mofs run`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV with a header and six objective columns, optionally labelled.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rstd")]
    pub scheme: Scheme,
    #[arg(long, num_args = 1..=6, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    /// Also print the top solutions under every preset scheme.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = mofs_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value = "mofs-data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = mofs_service::DEFAULT_WORKERS)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// German-credit-shaped data with a binary `Sex` attribute.
    Credit,
    /// Ten features, one of which predicts the label perfectly.
    Separable,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "credit")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = mofs_core::synth::CREDIT_ROWS)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Domain(format!("{}: {e}", path.display()))
}

fn weight_scheme(scheme: Scheme, weights: Option<&[f64]>) -> Result<WeightScheme, CliError> {
    match (scheme, weights) {
        (Scheme::Custom, Some(w)) => {
            normalize_custom(w).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(WeightScheme::Custom(w.to_vec()))
        }
        (Scheme::Custom, None) => Err(CliError::Usage("--scheme custom needs --weights with six values".into())),
        (_, Some(_)) => Err(CliError::Usage("--weights is only valid with --scheme custom".into())),
        (Scheme::Equal, None) => Ok(WeightScheme::Equal),
        (Scheme::Rstd, None) => Ok(WeightScheme::RangeOverStd),
        (Scheme::Entropy, None) => Ok(WeightScheme::Entropy),
    }
}

/// Everything about a run except the interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: DatasetFingerprint,
    pub config: PipelineConfig,
    pub ga: GaConfig,
    pub front: SolutionSet,
}

pub const RECORD_FILE: &str = "record.json";
pub const REPORT_FILE: &str = "report.json";
pub const TABLES_FILE: &str = "tables.txt";

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

pub fn run(args: &RunArgs) -> Result<InterpretationReport, CliError> {
    let scheme = weight_scheme(args.scheme, args.weights.as_deref())?;
    let spec = CsvSpec {
        target: args.target.clone(),
        sensitive: args.sensitive.clone(),
        positive_label: args.positive.clone(),
    };
    let ds = load_csv(&args.data, &spec).map_err(domain)?;
    let mut cfg = PipelineConfig {
        classifier: args.classifier.into(),
        seed: args.seed,
        test_fraction: args.test_fraction,
        vif_cap: args.vif_cap,
        ..Default::default()
    };
    cfg.report.clusters = args.clusters;
    cfg.report.scheme = scheme;
    if let Some(s) = args.samples {
        cfg.report.contribution.samples = s;
    }
    let m = ds.n_features();
    let ga = cfg.ga_config(m);
    log::info!(
        "{}: {} rows, {} features, population {}, budget {}",
        ds.name,
        ds.n_rows(),
        m,
        ga.population_size,
        ga.max_evaluations
    );
    let out = run_pipeline(&ds, &cfg, |p| {
        log::debug!("generation {}: {}/{} evaluations", p.generation, p.evaluations_done, p.max_evaluations);
    })
    .map_err(domain)?;
    log::info!(
        "{} evaluations, {} solutions on the front",
        out.run.front.provenance.evaluation_count,
        out.run.front.len()
    );

    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let record = RunRecord {
        dataset: ds.fingerprint(),
        config: cfg,
        ga,
        front: out.run.front,
    };
    write_file(&args.out.join(RECORD_FILE), &to_json(&record))?;
    write_file(&args.out.join(REPORT_FILE), &to_json(&out.report))?;
    write_file(&args.out.join(TABLES_FILE), tables::report_tables(&out.report).as_bytes())?;
    Ok(out.report)
}

/// Renders the ranking (and optionally the scheme comparison) as text.
pub fn rank(args: &RankArgs) -> Result<String, CliError> {
    let scheme = weight_scheme(args.scheme, args.weights.as_deref())?;
    let (labels, matrix): (Vec<(usize, String)>, ObjectiveMatrix) = match (&args.report, &args.matrix) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let report: InterpretationReport =
                serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
            let kept: Vec<_> = report.solutions.iter().filter(|s| !s.discarded).collect();
            let labels = kept.iter().map(|s| (s.id, format!("soln{}", s.id))).collect();
            let rows = kept.iter().map(|s| s.objectives.to_array()).collect();
            let ids = kept.iter().map(|s| s.id).collect();
            (labels, ObjectiveMatrix::with_ids(rows, ids).map_err(domain)?)
        }
        (None, Some(path)) => {
            let lm = matrix::load_matrix(path).map_err(CliError::Domain)?;
            (lm.labels.into_iter().enumerate().collect(), lm.matrix)
        }
        _ => return Err(CliError::Usage("give exactly one of --report or --matrix".into())),
    };
    if matrix.is_empty() {
        return Err(CliError::Domain("no solutions to rank".into()));
    }
    let label = |id: usize| {
        labels
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, l)| l.clone())
            .unwrap_or_else(|| id.to_string())
    };
    let weights = compute_weights(&matrix, &DIRECTIONS, &scheme).map_err(domain)?;
    let ranking = topsis_rank(&matrix, &DIRECTIONS, &weights).map_err(domain)?;
    let rows: Vec<[f64; N_OBJECTIVES]> = ranking
        .solution_ids
        .iter()
        .map(|id| matrix.rows()[matrix.ids().iter().position(|i| i == id).expect("id")])
        .collect();
    let mut out = format!("Objective weights ({})\n\n", weights.scheme);
    out.push_str(&tables::weights_table(&ranking));
    out.push_str("\nSolutions by TOPSIS score\n\n");
    out.push_str(&tables::ranking_table(&ranking, &rows, &label));
    if args.compare {
        let table = compare_weight_schemes(&matrix, &DIRECTIONS, &WeightScheme::presets()).map_err(domain)?;
        out.push_str("\nWeight sensitivity\n\n");
        let mut header = vec!["position".to_string()];
        header.extend(table.columns.iter().map(|c| c.scheme.clone()));
        let mut grid = tables::Grid::new(header);
        let depth = table.columns.iter().map(|c| c.top.len()).max().unwrap_or(0);
        for i in 0..depth {
            let mut row = vec![(i + 1).to_string()];
            row.extend(table.columns.iter().map(|c| c.top.get(i).map(|&id| label(id)).unwrap_or_default()));
            grid.push(row);
        }
        out.push_str(&grid.render());
    }
    Ok(out)
}

pub async fn serve(args: &ServeArgs, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), CliError> {
    let state = mofs_service::AppState::open(&args.data_dir, args.workers).map_err(domain)?;
    state.recover().map_err(domain)?;
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => CliError::Domain(format!("port {} is already in use", args.port)),
        _ => CliError::Domain(format!("cannot listen on {addr}: {e}")),
    })?;
    log::info!("listening on {}", listener.local_addr().map_err(domain)?);
    mofs_service::serve(listener, state, shutdown).await.map_err(domain)
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let csv = match args.kind {
        SynthKind::Credit => mofs_core::synth::credit_like_csv(args.rows, args.seed),
        SynthKind::Separable => mofs_core::synth::separable_csv(args.rows, args.seed),
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    write_file(&args.out, csv.as_bytes())
}
