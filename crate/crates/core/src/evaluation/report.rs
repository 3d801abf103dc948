use std::fmt::Write as _;

use serde::Serialize;

use super::cv::EvalReport;
use super::experiment::ExperimentTable;
use super::significance::{mcnemar, signed_rank, TestResult};
use crate::error::{invalid, Result};

/// Two classifiers scored on the same cases of one database.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatabaseComparison {
    pub name: String,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    /// McNemar test; its statistic is the signed normal score used as `z`.
    pub test: TestResult,
}

impl DatabaseComparison {
    pub fn difference(&self) -> f64 {
        self.accuracy_a - self.accuracy_b
    }
}

/// Pairs two reports over the same cases (same order) into a comparison.
pub fn compare_reports(name: impl Into<String>, a: &EvalReport, b: &EvalReport) -> Result<DatabaseComparison> {
    if a.scores.len() != b.scores.len()
        || a.scores.iter().zip(&b.scores).any(|(x, y)| x.true_class != y.true_class)
    {
        return invalid("reports to compare must score the same cases in the same order");
    }
    let paired: Vec<(bool, bool)> = a.correctness().into_iter().zip(b.correctness()).collect();
    Ok(DatabaseComparison {
        name: name.into(),
        accuracy_a: a.accuracy,
        accuracy_b: b.accuracy,
        test: mcnemar(&paired)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcrossDbSummary {
    pub databases: usize,
    /// Databases where the first classifier is more / less accurate.
    pub better_a: usize,
    pub better_b: usize,
    /// Same, restricted to per-database p-values at or below `alpha`.
    pub significant_a: usize,
    pub significant_b: usize,
    pub alpha: f64,
    /// Signed-rank test of zero median accuracy difference.
    pub magnitude: TestResult,
    /// Signed-rank test of zero median per-database `z`.
    pub significance: TestResult,
}

/// Across-database tests on the magnitude and on the significance of the
/// per-database differences.
pub fn across_databases(rows: &[DatabaseComparison], alpha: f64) -> Result<AcrossDbSummary> {
    if rows.is_empty() {
        return invalid("no databases to compare");
    }
    let diffs: Vec<f64> = rows.iter().map(DatabaseComparison::difference).collect();
    let zs: Vec<f64> = rows.iter().map(|r| r.test.statistic).collect();
    let sig = |r: &&DatabaseComparison| r.test.p_value <= alpha;
    Ok(AcrossDbSummary {
        databases: rows.len(),
        better_a: rows.iter().filter(|r| r.difference() > 0.0).count(),
        better_b: rows.iter().filter(|r| r.difference() < 0.0).count(),
        significant_a: rows.iter().filter(sig).filter(|r| r.difference() > 0.0).count(),
        significant_b: rows.iter().filter(sig).filter(|r| r.difference() < 0.0).count(),
        alpha,
        magnitude: signed_rank(&diffs)?,
        significance: signed_rank(&zs)?,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Aligned text summary of an evaluation.
pub fn eval_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cases     {}", report.n);
    let _ = writeln!(out, "accuracy  {:.6}", report.accuracy);
    let _ = writeln!(out, "ce_nats   {:.6}", report.ce);
    match report.auc {
        Some(a) => {
            let _ = writeln!(out, "auc       {a:.6}");
        }
        None => {
            let _ = writeln!(out, "# ROC area omitted: defined for binary classes only");
        }
    }
    if let Some(folds) = &report.per_fold {
        let _ = writeln!(out, "{:>5} {:>6} {:>8} {:>10} {:>10} {:>10} {:>5}", "fold", "n", "correct", "accuracy", "ce", "auc", "r_h");
        for f in folds {
            let auc = f.auc.map(|a| format!("{a:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>5} {:>6} {:>8} {:>10.6} {:>10.6} {:>10} {:>5}",
                f.fold, f.n, f.correct, f.accuracy, f.ce, auc, f.selected_r_h
            );
        }
    }
    out
}

/// One row per fold plus a pooled row; the `auc` column is dropped for
/// non-binary classes.
pub fn eval_csv(report: &EvalReport) -> String {
    let with_auc = report.auc.is_some();
    let mut out = String::from("fold,n,correct,accuracy,ce");
    out.push_str(if with_auc { ",auc,selected_r_h\n" } else { ",selected_r_h\n" });
    let mut row = |fold: &str, n: usize, correct: usize, acc: f64, ce: f64, auc: Option<f64>, r: String| {
        let _ = write!(out, "{fold},{n},{correct},{acc},{ce}");
        if with_auc {
            let _ = write!(out, ",{}", opt(auc));
        }
        let _ = writeln!(out, ",{r}");
    };
    for f in report.per_fold.iter().flatten() {
        row(&f.fold.to_string(), f.n, f.correct, f.accuracy, f.ce, f.auc, f.selected_r_h.to_string());
    }
    row("pooled", report.n, report.correct(), report.accuracy, report.ce, report.auc, String::new());
    out
}

pub fn experiment_csv(table: &ExperimentTable) -> String {
    let mut out = String::from(
        "train_size,replication,seed,true_r_h,selected_r_h,structural_difference,accuracy,auc,ce,status\n",
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.train_size,
            r.replication,
            r.seed,
            table.true_r_h,
            r.selected_r_h.map(|v| v.to_string()).unwrap_or_default(),
            r.structural_difference.map(|v| v.to_string()).unwrap_or_default(),
            opt(r.accuracy),
            opt(r.auc),
            opt(r.ce),
            r.status.replace([',', '\n'], " ")
        );
    }
    out
}

/// Plot-ready `(dataset, model_a_metric, model_b_metric)` rows.
pub fn scatter_csv(points: &[(String, f64, f64)]) -> String {
    let mut out = String::from("dataset,model_a_metric,model_b_metric\n");
    for (name, a, b) in points {
        let _ = writeln!(out, "{},{a},{b}", name.replace(',', " "));
    }
    out
}

pub fn comparison_text(rows: &[DatabaseComparison], summary: &AcrossDbSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# z = signed McNemar normal score (b - c)/sqrt(b + c); p = exact binomial");
    let _ = writeln!(out, "{:<24} {:>10} {:>10} {:>10} {:>9} {:>10}", "dataset", "acc_a", "acc_b", "d", "z", "p");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>10.6} {:>10.6} {:>10.6} {:>9.4} {:>10.6}",
            r.name,
            r.accuracy_a,
            r.accuracy_b,
            r.difference(),
            r.test.statistic,
            r.test.p_value
        );
    }
    let _ = writeln!(
        out,
        "a/b ratio {}/{}; significant at {}: {}/{}",
        summary.better_a, summary.better_b, summary.alpha, summary.significant_a, summary.significant_b
    );
    let _ = writeln!(out, "median(d) != 0: W+ = {}, p = {:.6}", summary.magnitude.statistic, summary.magnitude.p_value);
    let _ = writeln!(
        out,
        "median(z) != 0: W+ = {}, p = {:.6}",
        summary.significance.statistic, summary.significance.p_value
    );
    out
}
