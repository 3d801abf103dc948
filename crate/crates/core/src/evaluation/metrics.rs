use serde::Serialize;

use crate::classifier::Classifier;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};

/// A held-out case reduced to what the summary statistics need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledScore {
    pub true_class: usize,
    pub posterior: Vec<f64>,
    pub predicted: usize,
}

impl LabeledScore {
    pub fn is_correct(&self) -> bool {
        self.predicted == self.true_class
    }
}

/// Scores every case of `ds` with `model`. Cases must carry their class.
pub fn score_cases(model: &Classifier, ds: &Dataset) -> Result<Vec<LabeledScore>> {
    ds.cases()
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let true_class = ds
                .class_of(i)
                .ok_or_else(|| Error::InvalidArgument(format!("case {i} has no class label")))?;
            let p = model.posterior(case)?;
            Ok(LabeledScore {
                true_class,
                posterior: p.posterior,
                predicted: p.predicted,
            })
        })
        .collect()
}

fn require_nonempty(scores: &[LabeledScore]) -> Result<()> {
    if scores.is_empty() {
        return invalid("no scored cases");
    }
    Ok(())
}

/// Fraction of cases whose predicted class is the true class.
pub fn accuracy(scores: &[LabeledScore]) -> Result<f64> {
    require_nonempty(scores)?;
    let correct = scores.iter().filter(|s| s.is_correct()).count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Empirical conditional entropy `-(1/L) sum_l ln p(c_l | x_l)`, in nats.
pub fn conditional_entropy(scores: &[LabeledScore]) -> Result<f64> {
    require_nonempty(scores)?;
    let mut total = 0.0;
    for (i, s) in scores.iter().enumerate() {
        let p = s.posterior.get(s.true_class).copied().unwrap_or(0.0);
        if p.is_nan() || p <= 0.0 {
            return Err(Error::Undefined(format!(
                "case {i}: zero posterior probability at the true class"
            )));
        }
        total -= p.ln();
    }
    Ok(total / scores.len() as f64)
}

/// Area under the ROC curve of the `positive` class posterior, as the
/// normalized rank-sum; tied positive/negative pairs count one half.
pub fn roc_auc(scores: &[LabeledScore], positive: usize) -> Result<f64> {
    require_nonempty(scores)?;
    if scores.iter().any(|s| s.posterior.len() != 2) {
        return invalid("ROC area is defined for binary classes only");
    }
    if positive > 1 {
        return invalid(format!("positive class {positive} out of range for a binary class"));
    }
    let mut ranked: Vec<(f64, bool)> = scores
        .iter()
        .map(|s| (s.posterior[positive], s.true_class == positive))
        .collect();
    let n_pos = ranked.iter().filter(|(_, p)| *p).count();
    let n_neg = ranked.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("ROC area needs both classes present".into()));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ranks = average_ranks_sorted(&ranked.iter().map(|r| r.0).collect::<Vec<_>>());
    let rank_sum: f64 = ranked
        .iter()
        .zip(&ranks)
        .filter(|((_, p), _)| *p)
        .map(|(_, &r)| r)
        .sum();
    let n_pos = n_pos as f64;
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// 1-based average ranks of an already sorted slice.
pub(crate) fn average_ranks_sorted(sorted: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; sorted.len()];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].iter_mut().for_each(|r| *r = avg);
        i = j + 1;
    }
    ranks
}

/// 1-based average ranks in the original order.
pub(crate) fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let sorted_ranks = average_ranks_sorted(&sorted);
    let mut ranks = vec![0.0; xs.len()];
    for (&i, &r) in order.iter().zip(&sorted_ranks) {
        ranks[i] = r;
    }
    ranks
}
