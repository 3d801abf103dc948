//! Closed-form MAP estimators for multinomial and Gaussian conditionals.

use super::stats::{DiscreteStats, GaussianStats};
use crate::error::{invalid, Result};

/// Relative variance floor applied to every Gaussian cell.
pub const VARIANCE_FLOOR_RATIO: f64 = 1e-6;
/// Absolute floor for variables whose global variance is zero.
pub const MIN_VARIANCE: f64 = 1e-12;

/// `p(child = k | parents = j)` with its Dirichlet hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialCpd {
    arity: usize,
    configs: usize,
    theta: Vec<f64>,
    alpha: Vec<f64>,
    log_theta: Vec<f64>,
}

impl MultinomialCpd {
    /// Builds a CPD from explicit probability rows. Rows must each sum to 1.
    pub fn from_rows(rows: &[Vec<f64>], alpha: f64) -> Result<Self> {
        let arity = rows.first().map_or(0, Vec::len);
        if arity == 0 || rows.iter().any(|r| r.len() != arity) {
            return invalid("probability table must be non-empty and rectangular");
        }
        let theta = rows.concat();
        let alpha = vec![alpha; theta.len()];
        Self::from_parts(arity, rows.len(), theta, alpha)
    }

    pub(crate) fn from_parts(arity: usize, configs: usize, theta: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if theta.len() != arity * configs || alpha.len() != theta.len() {
            return invalid("probability table shape mismatch");
        }
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return invalid("Dirichlet hyperparameters must be positive");
        }
        for j in 0..configs {
            let row = &theta[j * arity..(j + 1) * arity];
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return invalid(format!("row {j} holds a value outside [0, 1]"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return invalid(format!("row {j} sums to {s}, not 1"));
            }
        }
        let log_theta = theta.iter().map(|p| p.ln()).collect();
        Ok(Self {
            arity,
            configs,
            theta,
            alpha,
            log_theta,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    #[inline]
    pub fn prob(&self, config: usize, value: usize) -> f64 {
        self.theta[config * self.arity + value]
    }

    #[inline]
    pub fn log_prob(&self, config: usize, value: usize) -> f64 {
        self.log_theta[config * self.arity + value]
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.theta[config * self.arity..(config + 1) * self.arity]
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_at(&self, config: usize, value: usize) -> f64 {
        self.alpha[config * self.arity + value]
    }
}

/// `theta_jk = (alpha_jk + N_jk) / (alpha_j + N_j)`.
pub fn map_multinomial(stats: &DiscreteStats, alpha: &[f64]) -> Result<MultinomialCpd> {
    let (q, r) = (stats.configs(), stats.arity());
    if alpha.len() != q * r {
        return invalid(format!("alpha table has {} cells, expected {}", alpha.len(), q * r));
    }
    if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return invalid("Dirichlet hyperparameters must be positive");
    }
    let mut theta = Vec::with_capacity(q * r);
    for j in 0..q {
        let a = &alpha[j * r..(j + 1) * r];
        let denom: f64 = a.iter().sum::<f64>() + stats.config_total(j);
        for (k, &ak) in a.iter().enumerate() {
            theta.push((ak + stats.count(j, k)) / denom);
        }
    }
    let log_theta = theta.iter().map(|p: &f64| p.ln()).collect();
    Ok(MultinomialCpd {
        arity: r,
        configs: q,
        theta,
        alpha: alpha.to_vec(),
        log_theta,
    })
}

/// Same estimator with every hyperparameter equal to `alpha`.
pub fn map_multinomial_uniform(stats: &DiscreteStats, alpha: f64) -> Result<MultinomialCpd> {
    map_multinomial(stats, &vec![alpha; stats.configs() * stats.arity()])
}

/// Per-configuration Normal distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCpd {
    mean: Vec<f64>,
    variance: Vec<f64>,
    fallback: Vec<bool>,
    log_norm: Vec<f64>,
}

impl GaussianCpd {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        Self::with_fallback(mean, variance, vec![false; n])
    }

    pub(crate) fn with_fallback(mean: Vec<f64>, variance: Vec<f64>, fallback: Vec<bool>) -> Result<Self> {
        if mean.len() != variance.len() || mean.is_empty() {
            return invalid("mean and variance tables must be non-empty and of equal length");
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return invalid("means must be finite");
        }
        if variance.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return invalid("variances must be positive and finite");
        }
        let log_norm = variance
            .iter()
            .map(|&v| -0.5 * (2.0 * std::f64::consts::PI * v).ln())
            .collect();
        Ok(Self {
            mean,
            variance,
            fallback,
            log_norm,
        })
    }

    pub fn configs(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn fallback(&self) -> &[bool] {
        &self.fallback
    }

    /// Configurations whose estimate fell back to the global moments.
    pub fn fallback_count(&self) -> usize {
        self.fallback.iter().filter(|&&f| f).count()
    }

    #[inline]
    pub fn log_density(&self, config: usize, x: f64) -> f64 {
        let d = x - self.mean[config];
        self.log_norm[config] - 0.5 * d * d / self.variance[config]
    }
}

/// Global moments of a continuous variable: the fallback used for
/// configurations with too little weight, and the variance floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRule {
    pub global_mean: f64,
    pub global_variance: f64,
    pub floor: f64,
}

impl VarianceRule {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = values.into_iter().collect();
        let n = xs.len() as f64;
        let mean = if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / n };
        let var = if xs.len() >= 2 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let floor = (VARIANCE_FLOOR_RATIO * var).max(MIN_VARIANCE);
        Self {
            global_mean: mean,
            global_variance: var.max(floor),
            floor,
        }
    }
}

/// Mean is the weighted average; variance is
/// `(N - 1) / (N (N - 3)) * sum (x - mean)^2`, floored. Cells with `N <= 3`
/// take the global moments instead.
pub fn map_gaussian(stats: &GaussianStats, rule: &VarianceRule) -> Result<GaussianCpd> {
    let q = stats.configs();
    let mut mean = Vec::with_capacity(q);
    let mut variance = Vec::with_capacity(q);
    let mut fallback = Vec::with_capacity(q);
    for j in 0..q {
        let n = stats.weight[j];
        if n <= 3.0 {
            mean.push(rule.global_mean);
            variance.push(rule.global_variance);
            fallback.push(true);
            continue;
        }
        let mu = stats.sum[j] / n;
        let scatter = (stats.sum_sq[j] - stats.sum[j] * mu).max(0.0);
        let var = (n - 1.0) / (n * (n - 3.0)) * scatter;
        mean.push(mu);
        variance.push(var.max(rule.floor));
        fallback.push(false);
    }
    GaussianCpd::with_fallback(mean, variance, fallback)
}
