//! Bayesian network classifiers built on a hidden mixture variable: naive
//! Bayes (NB), finite mixture (FM) and finite-mixture-augmented naive Bayes
//! (FAN), fitted by EM or classification EM, with penalized-likelihood
//! selection of the number of mixture components and an evaluation toolkit.

pub mod classifier;
pub mod data;
mod error;
pub mod estimation;
pub mod evaluation;
pub mod numeric;
pub mod selection;

pub use classifier::{Classifier, ModelKind, ModelStructure, Prediction};
pub use data::{Case, Cell, Dataset, Schema, VariableDecl};
pub use error::{Error, Result};
pub use estimation::{fit_em, EmConfig, EmMode, FitReport};
pub use selection::{select_components, ScoreKind, ScoreReport, SearchResult};
