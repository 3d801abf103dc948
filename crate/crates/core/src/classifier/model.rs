use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Case, Cell, Dataset, Schema};
use crate::error::{invalid, Error, Result};
use crate::estimation::{GaussianCpd, MultinomialCpd};
use crate::numeric::{argmax, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Features independent given the class.
    Nb,
    /// Hidden variable is the common parent of class and features.
    Fm,
    /// Naive Bayes with a hidden variable as an extra parent of every feature.
    Fan,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Fm => "fm",
            ModelKind::Fan => "fan",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(ModelKind::Nb),
            "fm" => Ok(ModelKind::Fm),
            "fan" => Ok(ModelKind::Fan),
            other => invalid(format!("unknown model kind `{other}` (expected nb, fm or fan)")),
        }
    }
}

/// Structure of a classifier before its parameters are known.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStructure {
    pub kind: ModelKind,
    pub schema: Schema,
    pub hidden_arity: usize,
    /// Dirichlet hyperparameter used for every multinomial cell.
    pub alpha: f64,
}

impl ModelStructure {
    pub fn new(kind: ModelKind, schema: Schema, hidden_arity: usize) -> Result<Self> {
        if hidden_arity == 0 {
            return invalid("hidden arity must be at least 1");
        }
        if kind == ModelKind::Nb && hidden_arity != 1 {
            return invalid("naive Bayes has no hidden variable; hidden arity must be 1");
        }
        Ok(Self {
            kind,
            schema,
            hidden_arity,
            alpha: 1.0,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return invalid("alpha must be positive");
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn class_arity(&self) -> usize {
        self.schema.class_arity()
    }

    /// Parent configurations of the class variable (`H` for FM, none otherwise).
    pub fn class_configs(&self) -> usize {
        match self.kind {
            ModelKind::Fm => self.hidden_arity,
            _ => 1,
        }
    }

    /// Parent configurations shared by every feature.
    pub fn feature_configs(&self) -> usize {
        match self.kind {
            ModelKind::Nb => self.class_arity(),
            ModelKind::Fm => self.hidden_arity,
            ModelKind::Fan => self.class_arity() * self.hidden_arity,
        }
    }

    /// Feature parent configuration for class `c` and hidden value `h`.
    #[inline]
    pub fn config(&self, c: usize, h: usize) -> usize {
        match self.kind {
            ModelKind::Nb => c,
            ModelKind::Fm => h,
            ModelKind::Fan => c * self.hidden_arity + h,
        }
    }

    pub fn has_mixing(&self) -> bool {
        self.kind != ModelKind::Nb
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureCpd {
    Discrete(MultinomialCpd),
    Continuous(GaussianCpd),
}

impl FeatureCpd {
    pub fn configs(&self) -> usize {
        match self {
            FeatureCpd::Discrete(c) => c.configs(),
            FeatureCpd::Continuous(c) => c.configs(),
        }
    }

    #[inline]
    fn log_lik(&self, config: usize, cell: Cell) -> f64 {
        match (self, cell) {
            (FeatureCpd::Discrete(cpd), Cell::Discrete(k)) => cpd.log_prob(config, k),
            (FeatureCpd::Continuous(cpd), Cell::Continuous(x)) => cpd.log_density(config, x),
            _ => 0.0,
        }
    }
}

/// Class posterior for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub posterior: Vec<f64>,
    pub predicted: usize,
    /// `log p(x)`, the class summed out.
    pub log_evidence: f64,
}

/// A fully parameterized NB, FM or FAN classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    structure: ModelStructure,
    class_cpd: MultinomialCpd,
    mixing: Option<MultinomialCpd>,
    features: Vec<FeatureCpd>,
    feature_vars: Vec<usize>,
}

impl Classifier {
    pub fn new(
        structure: ModelStructure,
        class_cpd: MultinomialCpd,
        mixing: Option<MultinomialCpd>,
        features: Vec<FeatureCpd>,
    ) -> Result<Self> {
        let schema = &structure.schema;
        let feature_vars = schema.feature_indices();
        if class_cpd.configs() != structure.class_configs() || class_cpd.arity() != structure.class_arity() {
            return Err(Error::Structure(format!(
                "class table is {}x{}, expected {}x{}",
                class_cpd.configs(),
                class_cpd.arity(),
                structure.class_configs(),
                structure.class_arity()
            )));
        }
        match (&mixing, structure.has_mixing()) {
            (None, false) => {}
            (Some(m), true) if m.configs() == 1 && m.arity() == structure.hidden_arity => {}
            _ => {
                return Err(Error::Structure(format!(
                    "mixing table does not match a {} model with hidden arity {}",
                    structure.kind, structure.hidden_arity
                )))
            }
        }
        if features.len() != feature_vars.len() {
            return Err(Error::Structure(format!(
                "{} feature tables for {} features",
                features.len(),
                feature_vars.len()
            )));
        }
        let q = structure.feature_configs();
        for (cpd, &var) in features.iter().zip(&feature_vars) {
            let decl = schema.variable(var);
            let ok = match (cpd, decl.arity()) {
                (FeatureCpd::Discrete(m), Some(r)) => m.arity() == r && m.configs() == q,
                (FeatureCpd::Continuous(g), None) => g.configs() == q,
                _ => false,
            };
            if !ok {
                return Err(Error::Structure(format!("table for `{}` has the wrong shape or type", decl.name)));
            }
        }
        Ok(Self {
            structure,
            class_cpd,
            mixing,
            features,
            feature_vars,
        })
    }

    /// Random parameters: Dirichlet(1) rows, means uniform on [-5, 5],
    /// variances uniform on [0.5, 2].
    pub fn random(structure: &ModelStructure, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = structure.alpha;
        let rows = |configs: usize, arity: usize, rng: &mut ChaCha8Rng| -> Result<MultinomialCpd> {
            let table: Vec<Vec<f64>> = (0..configs).map(|_| dirichlet_row(arity, rng)).collect();
            MultinomialCpd::from_rows(&table, alpha)
        };
        let class_cpd = rows(structure.class_configs(), structure.class_arity(), &mut rng)?;
        let mixing = if structure.has_mixing() {
            Some(rows(1, structure.hidden_arity, &mut rng)?)
        } else {
            None
        };
        let q = structure.feature_configs();
        let mut features = Vec::new();
        for var in structure.schema.feature_indices() {
            features.push(match structure.schema.variable(var).arity() {
                Some(r) => FeatureCpd::Discrete(rows(q, r, &mut rng)?),
                None => {
                    let mean = (0..q).map(|_| rng.random_range(-5.0..5.0)).collect();
                    let var = (0..q).map(|_| rng.random_range(0.5..2.0)).collect();
                    FeatureCpd::Continuous(GaussianCpd::new(mean, var)?)
                }
            });
        }
        Self::new(structure.clone(), class_cpd, mixing, features)
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    pub fn kind(&self) -> ModelKind {
        self.structure.kind
    }

    pub fn schema(&self) -> &Schema {
        &self.structure.schema
    }

    pub fn hidden_arity(&self) -> usize {
        self.structure.hidden_arity
    }

    pub fn class_cpd(&self) -> &MultinomialCpd {
        &self.class_cpd
    }

    pub fn mixing(&self) -> Option<&MultinomialCpd> {
        self.mixing.as_ref()
    }

    pub fn features(&self) -> &[FeatureCpd] {
        &self.features
    }

    /// Schema index of each feature table.
    pub fn feature_vars(&self) -> &[usize] {
        &self.feature_vars
    }

    /// `sum_i log p(x_i | config)` for every feature configuration. Missing
    /// features contribute nothing.
    pub fn feature_log_terms(&self, case: &Case) -> Vec<f64> {
        let q = self.structure.feature_configs();
        let mut out = vec![0.0; q];
        for (cpd, &var) in self.features.iter().zip(&self.feature_vars) {
            let cell = case.get(var);
            if cell.is_missing() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += cpd.log_lik(j, cell);
            }
        }
        out
    }

    #[inline]
    fn prior_term(&self, c: usize, h: usize) -> f64 {
        let class = match self.structure.kind {
            ModelKind::Fm => self.class_cpd.log_prob(h, c),
            _ => self.class_cpd.log_prob(0, c),
        };
        let mix = self.mixing.as_ref().map_or(0.0, |m| m.log_prob(0, h));
        class + mix
    }

    /// `log p(c, h, x)` over `h`, given precomputed feature terms.
    pub fn joint_from_terms(&self, terms: &[f64], c: usize) -> Vec<f64> {
        (0..self.structure.hidden_arity)
            .map(|h| self.prior_term(c, h) + terms[self.structure.config(c, h)])
            .collect()
    }

    /// `log p(c, x)` for every class value, given precomputed feature terms.
    pub fn class_log_joints_from_terms(&self, terms: &[f64]) -> Vec<f64> {
        (0..self.structure.class_arity())
            .map(|c| log_sum_exp(&self.joint_from_terms(terms, c)))
            .collect()
    }

    /// `log p(c, h, x)` over `h` for class `c`, touching only the
    /// configurations that class reaches.
    pub(crate) fn hidden_log_weights(&self, case: &Case, c: usize, out: &mut [f64]) {
        for (h, o) in out.iter_mut().enumerate() {
            *o = self.prior_term(c, h);
        }
        for (cpd, &var) in self.features.iter().zip(&self.feature_vars) {
            let cell = case.get(var);
            if cell.is_missing() {
                continue;
            }
            for (h, o) in out.iter_mut().enumerate() {
                *o += cpd.log_lik(self.structure.config(c, h), cell);
            }
        }
    }

    fn observed_class(&self, case: &Case) -> Result<usize> {
        case.get(self.schema().class_index())
            .discrete()
            .ok_or_else(|| Error::InvalidArgument("case has no class value".into()))
    }

    /// `log p(c, x)` for the case's own class value.
    pub fn log_joint(&self, case: &Case) -> Result<f64> {
        let c = self.observed_class(case)?;
        let mut w = vec![0.0; self.hidden_arity()];
        self.hidden_log_weights(case, c, &mut w);
        Ok(log_sum_exp(&w))
    }

    /// Class posterior; the case's class cell, if any, is ignored.
    pub fn posterior(&self, case: &Case) -> Result<Prediction> {
        self.posterior_from_terms(&self.feature_log_terms(case))
    }

    pub fn posterior_from_terms(&self, terms: &[f64]) -> Result<Prediction> {
        let joints = self.class_log_joints_from_terms(terms);
        let log_evidence = log_sum_exp(&joints);
        if !log_evidence.is_finite() {
            return Err(Error::Internal("every class has zero probability".into()));
        }
        let posterior: Vec<f64> = joints.iter().map(|&j| (j - log_evidence).exp()).collect();
        Ok(Prediction {
            predicted: argmax(&posterior),
            posterior,
            log_evidence,
        })
    }

    /// Observed-data log-likelihood `sum_l log p(c_l, x_l)`.
    pub fn loglik(&self, ds: &Dataset) -> Result<f64> {
        let mut w = vec![0.0; self.hidden_arity()];
        let mut total = 0.0;
        for case in ds.cases() {
            let c = self.observed_class(case)?;
            self.hidden_log_weights(case, c, &mut w);
            total += log_sum_exp(&w);
        }
        Ok(total)
    }

    /// Completed-data log-likelihood with each case assigned to its most
    /// probable hidden value.
    pub fn classification_loglik(&self, ds: &Dataset) -> Result<f64> {
        let mut w = vec![0.0; self.hidden_arity()];
        let mut total = 0.0;
        for case in ds.cases() {
            let c = self.observed_class(case)?;
            self.hidden_log_weights(case, c, &mut w);
            total += w[argmax(&w)];
        }
        Ok(total)
    }

    /// Forward samples; hidden values are dropped.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        Ok(self.sample_with_hidden(n, seed)?.0)
    }

    /// Forward samples in topological order (`H`, then `C`, then features),
    /// returning the hidden value drawn for each case alongside.
    pub fn sample_with_hidden(&self, n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
        if n == 0 {
            return invalid("sample size must be at least 1");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = self.schema();
        let mut cases = Vec::with_capacity(n);
        let mut hidden = Vec::with_capacity(n);
        let normals: Vec<Option<Vec<Normal<f64>>>> = self
            .features
            .iter()
            .map(|f| match f {
                FeatureCpd::Continuous(g) => Some(
                    g.mean()
                        .iter()
                        .zip(g.variance())
                        .map(|(&m, &v)| Normal::new(m, v.sqrt()).expect("valid normal"))
                        .collect(),
                ),
                FeatureCpd::Discrete(_) => None,
            })
            .collect();
        for _ in 0..n {
            let h = match &self.mixing {
                Some(m) => draw(m.row(0), &mut rng),
                None => 0,
            };
            let c = match self.structure.kind {
                ModelKind::Fm => draw(self.class_cpd.row(h), &mut rng),
                _ => draw(self.class_cpd.row(0), &mut rng),
            };
            let config = self.structure.config(c, h);
            let mut cells = vec![Cell::Missing; schema.len()];
            cells[schema.class_index()] = Cell::Discrete(c);
            for ((cpd, normal), &var) in self.features.iter().zip(&normals).zip(&self.feature_vars) {
                cells[var] = match cpd {
                    FeatureCpd::Discrete(m) => Cell::Discrete(draw(m.row(config), &mut rng)),
                    FeatureCpd::Continuous(_) => {
                        Cell::Continuous(normal.as_ref().expect("normal table")[config].sample(&mut rng))
                    }
                };
            }
            cases.push(Case(cells));
            hidden.push(h);
        }
        Ok((Dataset::new(schema.clone(), cases)?, hidden))
    }
}

fn draw(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub(crate) fn dirichlet_row(arity: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..arity).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    row
}
