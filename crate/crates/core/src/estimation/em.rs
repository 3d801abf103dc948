//! EM and classification-EM over the hidden mixture variable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::map::{map_gaussian, map_multinomial_uniform, GaussianCpd, MultinomialCpd, VarianceRule};
use super::stats::{DiscreteStats, GaussianStats, SuffStats};
use crate::classifier::{dirichlet_row, Classifier, FeatureCpd, ModelStructure};
use crate::data::{Cell, Dataset};
use crate::error::{invalid, Error, Result};
use crate::numeric::{argmax, derive_seed, normalize_log_weights, streams};

/// A hidden component whose total responsibility falls below this is re-seeded.
pub const EMPTY_COMPONENT_WEIGHT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmMode {
    /// Soft (fractional) completion.
    Em,
    /// Hard completion at the posterior argmax.
    Cem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Relative change of the log-likelihood below which a run stops.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub mode: EmMode,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            restarts: 5,
            seed: 0,
            mode: EmMode::Em,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return invalid("EM tolerance must be positive");
        }
        if self.restarts == 0 {
            return invalid("at least one restart is required");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations must be at least 1");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_mode(&self, mode: EmMode) -> Self {
        Self { mode, ..self.clone() }
    }
}

/// Sufficient statistics for every table of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStats {
    pub class: DiscreteStats,
    pub mixing: Option<DiscreteStats>,
    pub features: Vec<SuffStats>,
}

impl ModelStats {
    pub fn zeros(structure: &ModelStructure) -> Self {
        let q = structure.feature_configs();
        let features = structure
            .schema
            .feature_indices()
            .into_iter()
            .map(|v| match structure.schema.variable(v).arity() {
                Some(r) => SuffStats::Discrete(DiscreteStats::zeros(q, r)),
                None => SuffStats::Continuous(GaussianStats::zeros(q)),
            })
            .collect();
        Self {
            class: DiscreteStats::zeros(structure.class_configs(), structure.class_arity()),
            mixing: structure
                .has_mixing()
                .then(|| DiscreteStats::zeros(1, structure.hidden_arity)),
            features,
        }
    }

    /// Adds case `case` with hidden responsibilities `resp`.
    fn add_case(&mut self, structure: &ModelStructure, case: &crate::data::Case, c: usize, resp: &[f64]) {
        let feature_vars = structure.schema.feature_indices();
        if structure.class_configs() == 1 {
            self.class.add(0, c, 1.0);
        }
        for (h, &w) in resp.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if let Some(m) = &mut self.mixing {
                m.add(0, h, w);
            }
            if structure.class_configs() > 1 {
                self.class.add(h, c, w);
            }
            let config = structure.config(c, h);
            for (stats, &var) in self.features.iter_mut().zip(&feature_vars) {
                match (stats, case.get(var)) {
                    (SuffStats::Discrete(s), Cell::Discrete(k)) => s.add(config, k, w),
                    (SuffStats::Continuous(s), Cell::Continuous(x)) => s.add(config, x, w),
                    _ => {}
                }
            }
        }
    }
}

/// Why a run stopped iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative log-likelihood change fell below the tolerance.
    Tolerance,
    /// CEM: hard assignments did not change.
    AssignmentsStable,
    /// EM: the next iterate would have lowered the observed-data
    /// log-likelihood, so the current one was kept.
    LikelihoodDecrease,
    MaxIterations,
}

/// One line per restart in a [`FitReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub seed: u64,
    pub final_loglik: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// Observed-data log-likelihood after initialization and after every
    /// iteration of the winning restart.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
    /// Log-likelihood of the iterate rejected by the EM safeguard, if any.
    pub rejected_loglik: Option<f64>,
    pub iterations: usize,
    pub best_restart: usize,
    pub seed: u64,
    pub mode: EmMode,
    pub restarts: Vec<RestartOutcome>,
    /// Gaussian cells of the final model estimated from global moments.
    pub gaussian_fallbacks: usize,
    /// Empty components re-seeded during the winning restart.
    pub reseeds: usize,
}

impl FitReport {
    pub fn final_loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

/// Global moments of each continuous feature (`None` for discrete ones).
pub fn variance_rules(ds: &Dataset, structure: &ModelStructure) -> Vec<Option<VarianceRule>> {
    structure
        .schema
        .feature_indices()
        .into_iter()
        .map(|v| {
            structure.schema.variable(v).is_continuous().then(|| {
                VarianceRule::from_values(ds.cases().iter().filter_map(|c| c.get(v).continuous()))
            })
        })
        .collect()
}

/// M-step: MAP estimate of every table from `stats`.
pub fn maximize(structure: &ModelStructure, stats: &ModelStats, rules: &[Option<VarianceRule>]) -> Result<Classifier> {
    let class_cpd = map_multinomial_uniform(&stats.class, structure.alpha)?;
    let mixing = stats
        .mixing
        .as_ref()
        .map(|m| map_multinomial_uniform(m, structure.alpha))
        .transpose()?;
    let mut features = Vec::with_capacity(stats.features.len());
    for (s, rule) in stats.features.iter().zip(rules) {
        features.push(match (s, rule) {
            (SuffStats::Discrete(d), _) => FeatureCpd::Discrete(map_multinomial_uniform(d, structure.alpha)?),
            (SuffStats::Continuous(g), Some(rule)) => FeatureCpd::Continuous(map_gaussian(g, rule)?),
            (SuffStats::Continuous(_), None) => return Err(Error::Internal("missing variance rule".into())),
        });
    }
    Classifier::new(structure.clone(), class_cpd, mixing, features)
}

fn require_fit_data(ds: &Dataset) -> Result<()> {
    ds.require_complete()
}

/// Per-case hidden posteriors `p(h | c_l, x_l)` (row-major `N x r_h`) and the
/// observed-data log-likelihood.
fn responsibilities(ds: &Dataset, model: &Classifier) -> (f64, Vec<f64>) {
    let r = model.hidden_arity();
    let class_idx = ds.schema().class_index();
    let mut resp = vec![0.0; ds.len() * r];
    let mut loglik = 0.0;
    for (case, row) in ds.cases().iter().zip(resp.chunks_mut(r)) {
        let c = case.get(class_idx).discrete().expect("complete data");
        model.hidden_log_weights(case, c, row);
        loglik += normalize_log_weights(row);
    }
    (loglik, resp)
}

fn harden(resp: &mut [f64], r: usize) {
    for row in resp.chunks_mut(r) {
        let k = argmax(row);
        row.iter_mut().for_each(|v| *v = 0.0);
        row[k] = 1.0;
    }
}

fn accumulate(ds: &Dataset, structure: &ModelStructure, resp: &[f64]) -> ModelStats {
    let r = structure.hidden_arity;
    let class_idx = ds.schema().class_index();
    let mut stats = ModelStats::zeros(structure);
    for (case, row) in ds.cases().iter().zip(resp.chunks(r)) {
        let c = case.get(class_idx).discrete().expect("complete data");
        stats.add_case(structure, case, c, row);
    }
    stats
}

/// Expected sufficient statistics under `model`: each case spreads its
/// weight over hidden values by posterior probability.
pub fn expected_stats(ds: &Dataset, model: &Classifier) -> Result<ModelStats> {
    require_fit_data(ds)?;
    let (_, resp) = responsibilities(ds, model);
    Ok(accumulate(ds, model.structure(), &resp))
}

/// Hard-assignment statistics: each case counts once, at its most probable
/// hidden value (lowest index on ties).
pub fn cem_stats(ds: &Dataset, model: &Classifier) -> Result<ModelStats> {
    require_fit_data(ds)?;
    let (_, mut resp) = responsibilities(ds, model);
    harden(&mut resp, model.hidden_arity());
    Ok(accumulate(ds, model.structure(), &resp))
}

fn reseed_empty(resp: &mut [f64], r: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = resp.len() / r;
    if r == 1 || n == 0 {
        return 0;
    }
    let mut reseeded = 0;
    for h in 0..r {
        let weight: f64 = resp.chunks(r).map(|row| row[h]).sum();
        if weight < EMPTY_COMPONENT_WEIGHT {
            let l = rng.random_range(0..n);
            let row = &mut resp[l * r..(l + 1) * r];
            row.iter_mut().for_each(|v| *v = 0.0);
            row[h] = 1.0;
            reseeded += 1;
        }
    }
    reseeded
}

/// Responsibilities from one E-step under random parameters: Dirichlet(1)
/// multinomial rows, uniform mixing, and Gaussian cells centred on randomly
/// chosen training values with the global variance. Drawing responsibilities
/// independently of the data instead makes every component the same mixture
/// of the whole sample once N is large, which leaves EM at the symmetric
/// stationary point.
fn random_start(
    ds: &Dataset,
    structure: &ModelStructure,
    rules: &[Option<VarianceRule>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let alpha = structure.alpha;
    let rows = |configs: usize, arity: usize, rng: &mut ChaCha8Rng| {
        let table: Vec<Vec<f64>> = (0..configs).map(|_| dirichlet_row(arity, rng)).collect();
        MultinomialCpd::from_rows(&table, alpha)
    };
    let class_cpd = rows(structure.class_configs(), structure.class_arity(), rng)?;
    let r = structure.hidden_arity;
    let mixing = structure
        .has_mixing()
        .then(|| MultinomialCpd::from_rows(&[vec![1.0 / r as f64; r]], alpha))
        .transpose()?;
    let q = structure.feature_configs();
    let mut features = Vec::new();
    for (var, rule) in structure.schema.feature_indices().into_iter().zip(rules) {
        features.push(match (structure.schema.variable(var).arity(), rule) {
            (Some(arity), _) => FeatureCpd::Discrete(rows(q, arity, rng)?),
            (None, Some(rule)) => {
                let mean = (0..q)
                    .map(|_| {
                        ds.case(rng.random_range(0..ds.len()))
                            .get(var)
                            .continuous()
                            .expect("complete data")
                    })
                    .collect();
                FeatureCpd::Continuous(GaussianCpd::new(mean, vec![rule.global_variance; q])?)
            }
            (None, None) => return Err(Error::Internal("missing variance rule".into())),
        });
    }
    let model = Classifier::new(structure.clone(), class_cpd, mixing, features)?;
    Ok(responsibilities(ds, &model).1)
}

struct RunResult {
    model: Classifier,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    stop: StopReason,
    rejected_loglik: Option<f64>,
    reseeds: usize,
}

fn run_once(
    ds: &Dataset,
    structure: &ModelStructure,
    rules: &[Option<VarianceRule>],
    cfg: &EmConfig,
    seed: u64,
) -> Result<RunResult> {
    let r = structure.hidden_arity;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resp: Vec<f64> = if r == 1 {
        vec![1.0; ds.len()]
    } else {
        random_start(ds, structure, rules, &mut rng)?
    };
    let mut reseeds = reseed_empty(&mut resp, r, &mut rng);
    let mut model = maximize(structure, &accumulate(ds, structure, &resp), rules)?;
    let (mut ll, new_resp) = responsibilities(ds, &model);
    resp = new_resp;
    if !ll.is_finite() {
        return Err(Error::Fit("non-finite log-likelihood after initialization".into()));
    }
    let mut trace = vec![ll];
    let mut stop = StopReason::MaxIterations;
    let mut rejected_loglik = None;
    let mut iterations = 0;
    let mut assignment: Option<Vec<usize>> = None;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        if cfg.mode == EmMode::Cem {
            harden(&mut resp, r);
        }
        reseeds += reseed_empty(&mut resp, r, &mut rng);
        if cfg.mode == EmMode::Cem {
            assignment = Some(resp.chunks(r).map(argmax).collect());
        }
        let next_model = maximize(structure, &accumulate(ds, structure, &resp), rules)?;
        let (next_ll, next_resp) = responsibilities(ds, &next_model);
        if !next_ll.is_finite() {
            return Err(Error::Fit(format!("non-finite log-likelihood at iteration {it}")));
        }
        // The smoothed estimators and the small-cell variance fallback do not
        // guarantee an ascent step the way maximum likelihood does.
        if cfg.mode == EmMode::Em && next_ll < ll {
            rejected_loglik = Some(next_ll);
            stop = StopReason::LikelihoodDecrease;
            break;
        }
        model = next_model;
        trace.push(next_ll);
        let rel = (next_ll - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        ll = next_ll;
        resp = next_resp;
        if rel < cfg.tolerance {
            stop = StopReason::Tolerance;
            break;
        }
        if let Some(prev) = &assignment {
            if resp.chunks(r).map(argmax).eq(prev.iter().copied()) {
                stop = StopReason::AssignmentsStable;
                break;
            }
        }
    }
    let converged = matches!(stop, StopReason::Tolerance | StopReason::AssignmentsStable);
    Ok(RunResult {
        model,
        trace,
        iterations,
        converged,
        stop,
        rejected_loglik,
        reseeds,
    })
}

/// Fits the parameters of `structure` to `ds`, keeping the restart with the
/// highest final observed-data log-likelihood.
pub fn fit_em(ds: &Dataset, structure: &ModelStructure, cfg: &EmConfig) -> Result<(Classifier, FitReport)> {
    cfg.validate()?;
    require_fit_data(ds)?;
    if ds.is_empty() {
        return invalid("cannot fit a model to an empty dataset");
    }
    if ds.schema() != &structure.schema {
        return invalid("dataset schema differs from the model schema");
    }
    let rules = variance_rules(ds, structure);
    // Without a hidden variable every restart is the same closed-form fit.
    let restarts = if structure.hidden_arity == 1 { 1 } else { cfg.restarts };
    let seeds: Vec<u64> = (0..restarts)
        .map(|i| derive_seed(cfg.seed, streams::RESTART, i as u64))
        .collect();
    let runs: Vec<Result<RunResult>> = seeds
        .par_iter()
        .map(|&s| run_once(ds, structure, &rules, cfg, s))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut outcomes = Vec::with_capacity(runs.len());
    for (i, (run, &seed)) in runs.iter().zip(&seeds).enumerate() {
        match run {
            Ok(r) => {
                let fin = *r.trace.last().expect("trace");
                if best.is_none_or(|(_, b)| fin > b) {
                    best = Some((i, fin));
                }
                outcomes.push(RestartOutcome {
                    seed,
                    final_loglik: Some(fin),
                    iterations: r.iterations,
                    converged: r.converged,
                    stop: Some(r.stop),
                    error: None,
                });
            }
            Err(e) => outcomes.push(RestartOutcome {
                seed,
                final_loglik: None,
                iterations: 0,
                converged: false,
                stop: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let Some((best_idx, _)) = best else {
        let reasons: Vec<String> = outcomes.iter().filter_map(|o| o.error.clone()).collect();
        return Err(Error::Fit(format!("all {} restarts failed: {}", outcomes.len(), reasons.join("; "))));
    };
    let run = runs.into_iter().nth(best_idx).expect("index").expect("successful run");
    let gaussian_fallbacks = run
        .model
        .features()
        .iter()
        .map(|f| match f {
            FeatureCpd::Continuous(g) => g.fallback_count(),
            FeatureCpd::Discrete(_) => 0,
        })
        .sum();
    let report = FitReport {
        loglik_trace: run.trace,
        converged: run.converged,
        stop: run.stop,
        rejected_loglik: run.rejected_loglik,
        iterations: run.iterations,
        best_restart: best_idx,
        seed: cfg.seed,
        mode: cfg.mode,
        restarts: outcomes,
        gaussian_fallbacks,
        reseeds: run.reseeds,
    };
    Ok((run.model, report))
}
