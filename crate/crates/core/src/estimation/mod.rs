//! Sufficient statistics, closed-form MAP estimators and the EM/CEM loops.

mod em;
mod map;
mod stats;

pub use em::{
    cem_stats, expected_stats, fit_em, maximize, variance_rules, EmConfig, EmMode, FitReport, ModelStats,
    RestartOutcome, StopReason, EMPTY_COMPONENT_WEIGHT,
};
pub use map::{
    map_gaussian, map_multinomial, map_multinomial_uniform, GaussianCpd, MultinomialCpd, VarianceRule,
    MIN_VARIANCE, VARIANCE_FLOOR_RATIO,
};
pub use stats::{count_stats, DiscreteStats, GaussianStats, SuffStats};
