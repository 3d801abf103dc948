use crate::data::{Cell, Dataset};
use crate::error::{invalid, Result};

/// Counts `N_jk` of child value `k` under parent configuration `j`.
/// Counts may be fractional when they come from an E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStats {
    arity: usize,
    configs: usize,
    counts: Vec<f64>,
}

impl DiscreteStats {
    pub fn zeros(configs: usize, arity: usize) -> Self {
        Self {
            arity,
            configs,
            counts: vec![0.0; configs * arity],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let arity = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == arity), "ragged count table");
        Self {
            arity,
            configs: rows.len(),
            counts: rows.concat(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    pub fn count(&self, config: usize, value: usize) -> f64 {
        self.counts[config * self.arity + value]
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.counts[config * self.arity..(config + 1) * self.arity]
    }

    /// `N_j`, the marginal count of configuration `j`.
    pub fn config_total(&self, config: usize) -> f64 {
        self.row(config).iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    #[inline]
    pub fn add(&mut self, config: usize, value: usize, weight: f64) {
        self.counts[config * self.arity + value] += weight;
    }

    pub fn merge(&mut self, other: &DiscreteStats) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Per-configuration weight, weighted sum and weighted sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub weight: Vec<f64>,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl GaussianStats {
    pub fn zeros(configs: usize) -> Self {
        Self {
            weight: vec![0.0; configs],
            sum: vec![0.0; configs],
            sum_sq: vec![0.0; configs],
        }
    }

    pub fn configs(&self) -> usize {
        self.weight.len()
    }

    #[inline]
    pub fn add(&mut self, config: usize, x: f64, weight: f64) {
        self.weight[config] += weight;
        self.sum[config] += weight * x;
        self.sum_sq[config] += weight * x * x;
    }

    pub fn total(&self) -> f64 {
        self.weight.iter().sum()
    }

    pub fn merge(&mut self, other: &GaussianStats) {
        for j in 0..self.configs() {
            self.weight[j] += other.weight[j];
            self.sum[j] += other.sum[j];
            self.sum_sq[j] += other.sum_sq[j];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SuffStats {
    Discrete(DiscreteStats),
    Continuous(GaussianStats),
}

impl SuffStats {
    pub fn as_discrete(&self) -> Option<&DiscreteStats> {
        match self {
            SuffStats::Discrete(s) => Some(s),
            SuffStats::Continuous(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianStats> {
        match self {
            SuffStats::Continuous(s) => Some(s),
            SuffStats::Discrete(_) => None,
        }
    }

    /// Effective number of cases accumulated.
    pub fn total(&self) -> f64 {
        match self {
            SuffStats::Discrete(s) => s.total(),
            SuffStats::Continuous(s) => s.total(),
        }
    }

    pub fn merge(&mut self, other: &SuffStats) {
        match (self, other) {
            (SuffStats::Discrete(a), SuffStats::Discrete(b)) => a.merge(b),
            (SuffStats::Continuous(a), SuffStats::Continuous(b)) => a.merge(b),
            _ => unreachable!("merging mismatched statistics"),
        }
    }
}

/// Hard counts of `child` per configuration of the observed discrete
/// `parents`. Configurations are mixed-radix with the first parent most
/// significant.
pub fn count_stats(ds: &Dataset, child: usize, parents: &[usize]) -> Result<SuffStats> {
    let schema = ds.schema();
    let mut radices = Vec::with_capacity(parents.len());
    for &p in parents {
        match schema.variable(p).arity() {
            Some(r) => radices.push(r),
            None => return invalid(format!("parent `{}` must be discrete", schema.variable(p).name)),
        }
    }
    let configs: usize = radices.iter().product();
    let mut stats = match schema.variable(child).arity() {
        Some(r) => SuffStats::Discrete(DiscreteStats::zeros(configs, r)),
        None => SuffStats::Continuous(GaussianStats::zeros(configs)),
    };
    for (l, case) in ds.cases().iter().enumerate() {
        let mut config = 0;
        for (&p, &r) in parents.iter().zip(&radices) {
            match case.get(p) {
                Cell::Discrete(v) => config = config * r + v,
                _ => return missing_error(ds, l, p),
            }
        }
        match (&mut stats, case.get(child)) {
            (SuffStats::Discrete(s), Cell::Discrete(k)) => s.add(config, k, 1.0),
            (SuffStats::Continuous(s), Cell::Continuous(x)) => s.add(config, x, 1.0),
            _ => return missing_error(ds, l, child),
        }
    }
    Ok(stats)
}

fn missing_error<T>(ds: &Dataset, row: usize, var: usize) -> Result<T> {
    invalid(format!(
        "case {} is missing `{}`; hard counts need complete data, use expected_stats",
        row + 1,
        ds.schema().variable(var).name
    ))
}
