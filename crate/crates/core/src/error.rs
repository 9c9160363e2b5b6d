use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("file has no header or no data rows")]
    Empty,
    #[error("column not found: {0}")]
    MissingColumn(String),
    #[error("target column '{column}' must have exactly 2 distinct values, found {distinct}")]
    TargetNotBinary { column: String, distinct: usize },
    #[error("positive label '{0}' does not occur in the target column")]
    UnknownPositiveLabel(String),
    #[error("all {0} data rows were dropped because of missing cells")]
    AllRowsDropped(usize),
    #[error("target contains a single class")]
    SingleClass,
    #[error("sensitive column has fewer than 2 distinct groups")]
    SingleGroup,
    #[error("dataset needs at least 2 features, found {0}")]
    TooFewFeatures(usize),
    #[error("class {class} has {rows} row(s); at least 2 are needed to split")]
    ClassTooSmall { class: u8, rows: usize },
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("inconsistent dataset shape: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no columns selected")]
    EmptySelection,
    #[error("column index {index} out of range for {m} features")]
    ColumnOutOfRange { index: usize, m: usize },
    #[error("training partition lacks class {0}")]
    MissingClass(u8),
    #[error("logistic regression loss diverged after step-size rescaling")]
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty label vector")]
    Empty,
    #[error("ground truth contains a single class")]
    SingleClass,
    #[error("fewer than 2 sensitive groups present")]
    SingleGroup,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("population size {p} must exceed the feature count {m}")]
    PopulationTooSmall { p: usize, m: usize },
    #[error("max evaluations {max} must be at least the population size {p}")]
    BudgetTooSmall { max: usize, p: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("reference divisions must be at least 1")]
    Divisions,
    #[error("vif cap must be positive and finite, got {0}")]
    VifCap(f64),
    #[error("feature count {0} is too small; at least 2 are needed")]
    TooFewFeatures(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpretError {
    #[error("solution set is empty")]
    Empty,
    #[error("{needed} solutions needed, found {found}")]
    TooFewSolutions { needed: usize, found: usize },
    #[error("every objective column is constant; data-driven weights are undefined")]
    AllConstant,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("solution {0} does not exist")]
    UnknownSolution(usize),
    #[error("objective matrix row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}
