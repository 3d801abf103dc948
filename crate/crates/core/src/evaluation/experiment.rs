use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{accuracy, conditional_entropy, score_cases};
use super::significance::{spearman_rho, TestResult};
use super::cv::POSITIVE_CLASS;
use crate::classifier::{Classifier, ModelKind};
use crate::error::{invalid, Result};
use crate::estimation::EmConfig;
use crate::numeric::{derive_seed, streams};
use crate::selection::{select_components, structural_difference, ScoreKind};

pub const DEFAULT_TRAIN_SIZES: [usize; 3] = [200, 1000, 5000];
pub const DEFAULT_TEST_SIZE: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub replications: usize,
    pub score: ScoreKind,
    /// Model family learned from each training set; defaults to the gold
    /// standard's own.
    pub kind: Option<ModelKind>,
    pub r_max: Option<usize>,
    pub em: EmConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(score: ScoreKind, replications: usize, seed: u64) -> Self {
        Self {
            train_sizes: DEFAULT_TRAIN_SIZES.to_vec(),
            test_size: DEFAULT_TEST_SIZE,
            replications,
            score,
            kind: None,
            r_max: None,
            em: EmConfig::default(),
            seed,
        }
    }
}

/// One (training size, replication) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub train_size: usize,
    pub replication: usize,
    pub seed: u64,
    pub selected_r_h: Option<usize>,
    pub structural_difference: Option<i64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub ce: Option<f64>,
    /// `"ok"` or the error that stopped this cell.
    pub status: String,
}

impl ExperimentRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub true_r_h: usize,
    pub score: ScoreKind,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    /// Spearman correlation between `|structural difference|` and accuracy
    /// over the successful cells.
    pub fn correlation(&self) -> Result<TestResult> {
        let (diffs, accs): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter_map(|r| Some((r.structural_difference?.unsigned_abs() as f64, r.accuracy?)))
            .unzip();
        spearman_rho(&diffs, &accs)
    }
}

/// Seed of one cell; depends only on the master seed, the training size and
/// the replication index.
pub fn cell_seed(seed: u64, train_size: usize, replication: usize) -> u64 {
    derive_seed(derive_seed(seed, streams::TRAIN_SAMPLE, train_size as u64), streams::FIT, replication as u64)
}

fn run_cell(gs: &Classifier, cfg: &ExperimentConfig, train_size: usize, replication: usize) -> ExperimentRow {
    let seed = cell_seed(cfg.seed, train_size, replication);
    let mut row = ExperimentRow {
        train_size,
        replication,
        seed,
        selected_r_h: None,
        structural_difference: None,
        accuracy: None,
        auc: None,
        ce: None,
        status: "ok".into(),
    };
    let outcome = (|| -> Result<()> {
        let train = gs.sample(train_size, derive_seed(seed, streams::TRAIN_SAMPLE, 0))?;
        let test = gs.sample(cfg.test_size, derive_seed(seed, streams::TEST_SAMPLE, 0))?;
        let kind = cfg.kind.unwrap_or(gs.kind());
        let em = cfg.em.with_seed(derive_seed(seed, streams::FIT, 0));
        let search = select_components(&train, kind, cfg.score, cfg.r_max, &em)?;
        let scores = score_cases(&search.model, &test)?;
        row.selected_r_h = Some(search.selected_r_h);
        row.structural_difference = Some(structural_difference(search.selected_r_h, gs.hidden_arity()));
        row.accuracy = Some(accuracy(&scores)?);
        row.ce = Some(conditional_entropy(&scores)?);
        if gs.structure().class_arity() == 2 {
            row.auc = super::metrics::roc_auc(&scores, POSITIVE_CLASS).ok();
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = e.to_string();
    }
    row
}

/// Gold-standard protocol: for every training size and replication, sample
/// a training set and a fixed-size test set from `gs`, select and fit a
/// model on the former and score it on the latter. Cell failures are
/// recorded in the row's status.
pub fn gs_experiment(gs: &Classifier, cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    if cfg.replications == 0 {
        return invalid("at least one replication is required");
    }
    if cfg.train_sizes.is_empty() || cfg.train_sizes.contains(&0) {
        return invalid("training sizes must be non-empty and positive");
    }
    if cfg.test_size == 0 {
        return invalid("test size must be positive");
    }
    let cells: Vec<(usize, usize)> = cfg
        .train_sizes
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let rows = cells.par_iter().map(|&(n, r)| run_cell(gs, cfg, n, r)).collect();
    Ok(ExperimentTable {
        true_r_h: gs.hidden_arity(),
        score: cfg.score,
        rows,
    })
}
