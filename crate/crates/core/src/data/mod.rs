//! Schemas, datasets, CSV ingestion, fold construction and supervised
//! discretization.

mod dataset;
mod discretize;
mod folds;
mod schema;

pub use dataset::{Case, Cell, Dataset, DEFAULT_MISSING_MARKER};
pub use discretize::{apply_discretization, discretize_supervised, fit_discretization, DiscretizationMap, VariableCuts};
pub use folds::{stratified_folds, FoldPlan};
pub use schema::{Schema, VariableDecl, VariableKind};
