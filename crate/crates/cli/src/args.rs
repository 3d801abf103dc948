use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mixfan::{ModelKind, ScoreKind};

#[derive(Parser, Debug)]
#[command(name = "mixfan", version, about = "Naive Bayes, finite mixture and FAN classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed. Falls back to MIXFAN_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Marker for missing cells in CSV input and output.
    #[arg(long, global = true, default_value = "?")]
    pub missing: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a classifier, selecting the number of mixture components.
    Train(TrainArgs),
    /// Class posteriors for every case of a dataset.
    Predict(PredictArgs),
    /// Cross-validated or hold-out evaluation.
    Evaluate(EvaluateArgs),
    /// Simulated-data experiment against a gold-standard model.
    Simulate(SimulateArgs),
    /// Supervised discretization of continuous variables.
    Discretize(DiscretizeArgs),
    /// Draw cases from a saved model.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Dataset in CSV form, header matching the schema.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON file.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct EmArgs {
    /// Relative log-likelihood change that stops EM.
    #[arg(long, default_value_t = 1e-6)]
    pub em_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub em_max_iter: usize,
    /// Random restarts per fit.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Use classification EM (hard assignments).
    #[arg(long)]
    pub cem: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SelectionArgs {
    #[arg(long, default_value = "fan")]
    pub model: ModelKind,
    #[arg(long, default_value = "bic")]
    pub score: ScoreKind,
    /// Largest component count tried; default min(20, floor(sqrt(N))).
    #[arg(long)]
    pub r_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub em: EmArgs,
    /// Where to write the fitted model.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-candidate table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved model; its schema is used to read the data.
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Prediction CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset for cross-validation, or the training set of a hold-out run
    /// without --model-file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Stratified cross-validation with this many folds.
    #[arg(long, conflicts_with = "holdout")]
    pub cv: Option<usize>,
    /// Test file scored by the model given with --model-file.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    #[arg(long = "model-file")]
    pub model_file: Option<PathBuf>,
    /// Second model family scored on the same folds and compared with McNemar's test.
    #[arg(long, requires = "cv")]
    pub compare: Option<ModelKind>,
    /// Fit supervised discretization on each training fold.
    #[arg(long, requires = "cv")]
    pub discretize: bool,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub em: EmArgs,
    /// Text report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-fold CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Gold-standard model file.
    #[arg(long)]
    pub gs: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 1000, 5000])]
    pub train_sizes: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub test_size: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value = "icl")]
    pub score: ScoreKind,
    /// Model family learned; defaults to the gold standard's.
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub r_max: Option<usize>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Experiment CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Correlation summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Reuse the cut points of an existing map instead of fitting new ones.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    #[arg(long)]
    pub out_data: PathBuf,
    #[arg(long)]
    pub out_schema: PathBuf,
    /// Map file written when cut points are fitted.
    #[arg(long)]
    pub out_map: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}
