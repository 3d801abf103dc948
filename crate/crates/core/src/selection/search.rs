use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::scores::{score, ScoreKind, ScoreReport};
use crate::classifier::{Classifier, ModelKind, ModelStructure};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::estimation::{fit_em, EmConfig, EmMode, FitReport};
use crate::numeric::{derive_seed, streams};

/// Cap on the candidate hidden arity when none is given: `min(20, floor(sqrt N))`.
pub fn default_r_max(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).clamp(1, 20)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub r_h: usize,
    pub seed: u64,
    /// Every score computable from this candidate's fit.
    pub scores: Vec<ScoreReport>,
    pub fit: Option<FitReport>,
    pub error: Option<String>,
}

impl Candidate {
    pub fn score(&self, kind: ScoreKind) -> Option<&ScoreReport> {
        self.scores.iter().find(|s| s.kind == kind)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub kind: ModelKind,
    pub score: ScoreKind,
    pub mode: EmMode,
    pub candidates: Vec<Candidate>,
    pub selected_r_h: usize,
    pub model: Classifier,
    pub fit: FitReport,
    pub seed: u64,
}

impl SearchResult {
    /// Hidden arity that `kind` would select over the same fits (smaller
    /// arity wins ties). `None` if no candidate carries that score.
    pub fn selected_by(&self, kind: ScoreKind) -> Option<usize> {
        argmax_candidate(&self.candidates, kind)
    }

    pub fn selected_report(&self) -> &ScoreReport {
        self.candidates
            .iter()
            .find(|c| c.r_h == self.selected_r_h)
            .and_then(|c| c.score(self.score))
            .expect("selected candidate has its score")
    }

    /// Aligned per-candidate table for the selection score.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# model={} score={} mode={} seed={} selected_r_h={}",
            self.kind,
            self.score,
            match self.mode {
                EmMode::Em => "em",
                EmMode::Cem => "cem",
            },
            self.seed,
            self.selected_r_h
        );
        let _ = writeln!(
            out,
            "{:>5} {:>20} {:>8} {:>20} {:>20} {:>9}",
            "r_h", "loglik", "d", "penalty", "value", "selected"
        );
        for c in &self.candidates {
            match c.score(self.score) {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{:>5} {:>20.6} {:>8} {:>20.6} {:>20.6} {:>9}",
                        c.r_h,
                        s.loglik,
                        s.d,
                        s.penalty,
                        s.value,
                        if c.r_h == self.selected_r_h { "*" } else { "" }
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:>5} failed: {}",
                        c.r_h,
                        c.error.as_deref().unwrap_or("no score")
                    );
                }
            }
        }
        out
    }
}

fn argmax_candidate(candidates: &[Candidate], kind: ScoreKind) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for c in candidates {
        if let Some(s) = c.score(kind) {
            if best.is_none_or(|(_, v)| s.value > v) {
                best = Some((c.r_h, s.value));
            }
        }
    }
    best.map(|(r, _)| r)
}

/// Fits every candidate hidden arity `1..=r_max` (just `1` for NB) with its
/// own derived seed, scores each, and keeps the best under `score_kind`.
/// ICL forces classification EM.
pub fn select_components(
    ds: &Dataset,
    kind: ModelKind,
    score_kind: ScoreKind,
    r_max: Option<usize>,
    cfg: &EmConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let r_max = r_max.unwrap_or_else(|| default_r_max(ds.len()));
    if r_max == 0 {
        return invalid("r_max must be at least 1");
    }
    let mode = score_kind.required_mode().unwrap_or(cfg.mode);
    let arities: Vec<usize> = match kind {
        ModelKind::Nb => vec![1],
        _ => (1..=r_max).collect(),
    };
    let mut score_kinds = vec![ScoreKind::Bic, ScoreKind::Aic];
    score_kinds.push(match mode {
        EmMode::Em => ScoreKind::Cs,
        EmMode::Cem => ScoreKind::Icl,
    });
    if !score_kinds.contains(&score_kind) {
        return invalid(format!("score {score_kind} is not available for {mode:?} fits"));
    }

    let fitted: Vec<(Candidate, Option<Classifier>)> = arities
        .par_iter()
        .map(|&r_h| {
            let seed = derive_seed(cfg.seed, streams::CANDIDATE, r_h as u64);
            let attempt = || -> Result<(Classifier, FitReport, Vec<ScoreReport>)> {
                let structure = ModelStructure::new(kind, ds.schema().clone(), r_h)?;
                let (model, fit) = fit_em(ds, &structure, &cfg.with_seed(seed).with_mode(mode))?;
                let scores = score_kinds
                    .iter()
                    .map(|&k| score(k, &model, ds, &fit))
                    .collect::<Result<Vec<_>>>()?;
                Ok((model, fit, scores))
            };
            match attempt() {
                Ok((model, fit, scores)) => (
                    Candidate {
                        r_h,
                        seed,
                        scores,
                        fit: Some(fit),
                        error: None,
                    },
                    Some(model),
                ),
                Err(e) => (
                    Candidate {
                        r_h,
                        seed,
                        scores: Vec::new(),
                        fit: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let (candidates, models): (Vec<Candidate>, Vec<Option<Classifier>>) = fitted.into_iter().unzip();
    let Some(selected_r_h) = argmax_candidate(&candidates, score_kind) else {
        let failures: Vec<String> = candidates
            .iter()
            .map(|c| format!("r_h={}: {}", c.r_h, c.error.as_deref().unwrap_or("unknown")))
            .collect();
        return Err(Error::Selection(format!("every candidate failed ({})", failures.join("; "))));
    };
    let idx = candidates.iter().position(|c| c.r_h == selected_r_h).expect("selected");
    let model = models.into_iter().nth(idx).flatten().expect("selected model");
    let fit = candidates[idx].fit.clone().expect("selected fit");
    Ok(SearchResult {
        kind,
        score: score_kind,
        mode,
        candidates,
        selected_r_h,
        model,
        fit,
        seed: cfg.seed,
    })
}
