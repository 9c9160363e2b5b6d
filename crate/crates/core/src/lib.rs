//! Many-objective feature selection and interpretation of the resulting
//! Pareto front.
//!
//! The search scores binary feature masks on six objectives (subset size,
//! balanced accuracy, F1, multicollinearity, statistical parity and equalised
//! odds) with NSGA-III. The front is then clustered, weighted, ranked with
//! TOPSIS and explained through feature frequency and Shapley contributions.

pub mod data;
pub mod error;
pub mod interpret;
pub mod mask;
pub mod models;
pub mod moea;
pub mod objectives;
pub mod pipeline;
pub mod report;
pub mod store;
pub mod synth;

pub use data::{load_csv, read_csv, stratified_split, CsvSpec, Dataset, Split};
pub use mask::FeatureMask;
pub use models::ClassifierKind;
pub use objectives::{Direction, Objective, ObjectiveVector, DIRECTIONS};
