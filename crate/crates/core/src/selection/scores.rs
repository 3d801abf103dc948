//! Penalized-likelihood scores. Higher is better for every kind.
//!
//! * BIC: `L - (d / 2) ln N`
//! * AIC: `L - d`
//! * CS (Cheeseman-Stutz): `log p(D' | M) + L - log p(D' | theta)` where `D'`
//!   is the data completed with expected sufficient statistics at the fitted
//!   parameters. The multinomial part of `log p(D' | M)` is the
//!   Dirichlet-multinomial integral; Gaussian tables contribute their
//!   likelihood at the fitted point, so they cancel against the third term.
//! * ICL: `L_c - (d / 2) ln N`, with `L_c` the completed-data likelihood with
//!   every case assigned to its most probable component, at a CEM solution.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::classifier::{Classifier, FeatureCpd, ModelKind, ModelStructure};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::estimation::{expected_stats, DiscreteStats, EmMode, FitReport, MultinomialCpd, SuffStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Bic,
    Aic,
    Cs,
    Icl,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 4] = [ScoreKind::Bic, ScoreKind::Aic, ScoreKind::Cs, ScoreKind::Icl];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Bic => "bic",
            ScoreKind::Aic => "aic",
            ScoreKind::Cs => "cs",
            ScoreKind::Icl => "icl",
        }
    }

    /// EM variant a fit needs for this score.
    pub fn required_mode(&self) -> Option<EmMode> {
        match self {
            ScoreKind::Icl => Some(EmMode::Cem),
            _ => None,
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(ScoreKind::Bic),
            "aic" => Ok(ScoreKind::Aic),
            "cs" => Ok(ScoreKind::Cs),
            "icl" => Ok(ScoreKind::Icl),
            other => invalid(format!("unknown score `{other}` (expected bic, aic, cs or icl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub kind: ScoreKind,
    pub value: f64,
    pub loglik: f64,
    /// `value = loglik + penalty`.
    pub penalty: f64,
    pub d: usize,
    pub r_h: usize,
    /// Set when Gaussian tables entered a CS score at their fitted point
    /// instead of through a marginal likelihood.
    pub gaussian_plugin: bool,
}

/// Number of free parameters of `structure`.
pub fn param_count(structure: &ModelStructure) -> usize {
    let rc = structure.class_arity();
    let rh = structure.hidden_arity;
    let per_feature = |q: usize| -> usize {
        structure
            .schema
            .feature_indices()
            .into_iter()
            .map(|v| match structure.schema.variable(v).arity() {
                Some(r) => q * (r - 1),
                None => 2 * q,
            })
            .sum()
    };
    match structure.kind {
        ModelKind::Nb => (rc - 1) + per_feature(rc),
        ModelKind::Fm => (rh - 1) + rh * (rc - 1) + per_feature(rh),
        ModelKind::Fan => (rc - 1) + (rh - 1) + per_feature(rc * rh),
    }
}

/// `log` of the Dirichlet-multinomial integral for (possibly fractional)
/// counts under hyperparameters `cpd.alpha()`.
pub fn log_marginal_multinomial(stats: &DiscreteStats, cpd: &MultinomialCpd) -> f64 {
    let mut total = 0.0;
    for j in 0..stats.configs() {
        let mut alpha_j = 0.0;
        let mut n_j = 0.0;
        for k in 0..stats.arity() {
            let a = cpd.alpha_at(j, k);
            let n = stats.count(j, k);
            alpha_j += a;
            n_j += n;
            total += ln_gamma(a + n) - ln_gamma(a);
        }
        total += ln_gamma(alpha_j) - ln_gamma(alpha_j + n_j);
    }
    total
}

fn plugin_multinomial(stats: &DiscreteStats, cpd: &MultinomialCpd) -> f64 {
    let mut total = 0.0;
    for j in 0..stats.configs() {
        for k in 0..stats.arity() {
            let n = stats.count(j, k);
            if n > 0.0 {
                total += n * cpd.log_prob(j, k);
            }
        }
    }
    total
}

fn cs_correction(model: &Classifier, ds: &Dataset) -> Result<(f64, bool)> {
    let stats = expected_stats(ds, model)?;
    let mut correction =
        log_marginal_multinomial(&stats.class, model.class_cpd()) - plugin_multinomial(&stats.class, model.class_cpd());
    if let (Some(s), Some(m)) = (&stats.mixing, model.mixing()) {
        correction += log_marginal_multinomial(s, m) - plugin_multinomial(s, m);
    }
    let mut plugin = false;
    for (s, f) in stats.features.iter().zip(model.features()) {
        match (s, f) {
            (SuffStats::Discrete(s), FeatureCpd::Discrete(m)) => {
                correction += log_marginal_multinomial(s, m) - plugin_multinomial(s, m);
            }
            _ => plugin = true,
        }
    }
    Ok((correction, plugin))
}

pub fn score(kind: ScoreKind, model: &Classifier, ds: &Dataset, fit: &FitReport) -> Result<ScoreReport> {
    if kind == ScoreKind::Icl && fit.mode != EmMode::Cem {
        return invalid("ICL needs a model fitted by classification EM");
    }
    let n = ds.len();
    if n == 0 {
        return invalid("cannot score on an empty dataset");
    }
    let loglik = model.loglik(ds)?;
    let d = param_count(model.structure());
    let half_log_n = 0.5 * (n as f64).ln();
    let mut gaussian_plugin = false;
    let penalty = match kind {
        ScoreKind::Bic => -(d as f64) * half_log_n,
        ScoreKind::Aic => -(d as f64),
        ScoreKind::Cs => {
            let (correction, plugin) = cs_correction(model, ds)?;
            gaussian_plugin = plugin;
            correction
        }
        ScoreKind::Icl => (model.classification_loglik(ds)? - loglik) - d as f64 * half_log_n,
    };
    Ok(ScoreReport {
        kind,
        value: loglik + penalty,
        loglik,
        penalty,
        d,
        r_h: model.hidden_arity(),
        gaussian_plugin,
    })
}

/// Signed difference in component count, learned minus true.
pub fn structural_difference(selected: usize, truth: usize) -> i64 {
    selected as i64 - truth as i64
}
