use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{accuracy, conditional_entropy, roc_auc, score_cases, LabeledScore};
use crate::classifier::{Classifier, ModelKind};
use crate::data::{apply_discretization, fit_discretization, stratified_folds, Dataset};
use crate::error::{invalid, Result};
use crate::estimation::EmConfig;
use crate::numeric::{derive_seed, streams};
use crate::selection::{select_components, ScoreKind};

/// Class index treated as positive for ROC area on binary problems.
pub const POSITIVE_CLASS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub kind: ModelKind,
    pub score: ScoreKind,
    pub folds: usize,
    pub seed: u64,
    pub r_max: Option<usize>,
    pub em: EmConfig,
    /// Discretize continuous features on each training portion and apply
    /// the same cuts to its held-out portion.
    pub discretize: bool,
}

impl CvConfig {
    pub fn new(kind: ModelKind, score: ScoreKind, folds: usize, seed: u64) -> Self {
        Self {
            kind,
            score,
            folds,
            seed,
            r_max: None,
            em: EmConfig::default(),
            discretize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub ce: f64,
    pub auc: Option<f64>,
    pub selected_r_h: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub ce: f64,
    /// Present for binary classes only.
    pub auc: Option<f64>,
    pub n: usize,
    pub per_fold: Option<Vec<FoldReport>>,
    /// Per-case scores in dataset order, for paired comparisons.
    pub scores: Vec<LabeledScore>,
}

impl EvalReport {
    pub fn correct(&self) -> usize {
        self.scores.iter().filter(|s| s.is_correct()).count()
    }

    pub fn correctness(&self) -> Vec<bool> {
        self.scores.iter().map(LabeledScore::is_correct).collect()
    }
}

fn binary_auc(scores: &[LabeledScore]) -> Option<f64> {
    let binary = scores.first().is_some_and(|s| s.posterior.len() == 2);
    if binary {
        roc_auc(scores, POSITIVE_CLASS).ok()
    } else {
        None
    }
}

fn summarize(scores: Vec<LabeledScore>, per_fold: Option<Vec<FoldReport>>) -> Result<EvalReport> {
    Ok(EvalReport {
        accuracy: accuracy(&scores)?,
        ce: conditional_entropy(&scores)?,
        auc: binary_auc(&scores),
        n: scores.len(),
        per_fold,
        scores,
    })
}

/// Scores an already fitted model on held-out data.
pub fn evaluate_holdout(model: &Classifier, test: &Dataset) -> Result<EvalReport> {
    summarize(score_cases(model, test)?, None)
}

/// Held-out indices, their scores and the selected arity of one fold.
type FoldOutcome = (Vec<usize>, Vec<LabeledScore>, usize);

/// Stratified k-fold cross-validation. Everything learned (discretization,
/// component selection, parameters) comes from each training portion only;
/// accuracy, conditional entropy and ROC area are pooled over all held-out
/// predictions.
pub fn cross_validate(ds: &Dataset, cfg: &CvConfig) -> Result<EvalReport> {
    ds.require_complete()?;
    if cfg.folds < 2 {
        return invalid("cross-validation needs at least two folds");
    }
    let plan = stratified_folds(ds, cfg.folds, cfg.seed)?;
    let folds: Vec<Result<FoldOutcome>> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let test_idx = plan.test_indices(f);
            let mut train = ds.subset(&plan.train_indices(f));
            let mut test = ds.subset(&test_idx);
            if cfg.discretize && !ds.schema().continuous_indices().is_empty() {
                let map = fit_discretization(&train)?;
                train = apply_discretization(&train, &map)?;
                test = apply_discretization(&test, &map)?;
            }
            let em = cfg.em.with_seed(derive_seed(cfg.seed, streams::FOLD, f as u64));
            let search = select_components(&train, cfg.kind, cfg.score, cfg.r_max, &em)?;
            Ok((test_idx, score_cases(&search.model, &test)?, search.selected_r_h))
        })
        .collect();

    let mut pooled: Vec<Option<LabeledScore>> = vec![None; ds.len()];
    let mut per_fold = Vec::with_capacity(cfg.folds);
    for (f, fold) in folds.into_iter().enumerate() {
        let (idx, scores, selected_r_h) = fold?;
        let correct = scores.iter().filter(|s| s.is_correct()).count();
        per_fold.push(FoldReport {
            fold: f,
            n: scores.len(),
            correct,
            accuracy: accuracy(&scores)?,
            ce: conditional_entropy(&scores)?,
            auc: binary_auc(&scores),
            selected_r_h,
        });
        for (i, s) in idx.into_iter().zip(scores) {
            pooled[i] = Some(s);
        }
    }
    let scores: Vec<LabeledScore> = pooled.into_iter().map(|s| s.expect("every case is held out once")).collect();
    summarize(scores, Some(per_fold))
}
