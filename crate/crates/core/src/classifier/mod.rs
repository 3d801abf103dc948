//! NB, FM and FAN classifiers: joint probability, class posterior,
//! likelihood, forward sampling and model files.

mod format;
mod model;

pub use format::{from_json, to_json, FORMAT_VERSION};
pub use model::{Classifier, FeatureCpd, ModelKind, ModelStructure, Prediction};
pub(crate) use model::dirichlet_row;
