//! Penalized-likelihood scoring and the search over the hidden variable's
//! cardinality.

mod scores;
mod search;

pub use scores::{log_marginal_multinomial, param_count, score, structural_difference, ScoreKind, ScoreReport};
pub use search::{default_r_max, select_components, Candidate, SearchResult};
