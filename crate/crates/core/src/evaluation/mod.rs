//! Summary statistics, significance tests and the evaluation protocols.

mod cv;
mod experiment;
mod metrics;
mod report;
mod significance;

pub use cv::{cross_validate, evaluate_holdout, CvConfig, EvalReport, FoldReport, POSITIVE_CLASS};
pub use experiment::{
    cell_seed, gs_experiment, ExperimentConfig, ExperimentRow, ExperimentTable, DEFAULT_TEST_SIZE,
    DEFAULT_TRAIN_SIZES,
};
pub use metrics::{accuracy, conditional_entropy, roc_auc, score_cases, LabeledScore};
pub use report::{
    across_databases, compare_reports, comparison_text, eval_csv, eval_text, experiment_csv, scatter_csv,
    AcrossDbSummary, DatabaseComparison,
};
pub use significance::{
    mcnemar, mcnemar_counts, paired_t, signed_rank, spearman_rho, TestResult, SIGNED_RANK_EXACT_MAX,
    SPEARMAN_EXACT_MAX,
};
