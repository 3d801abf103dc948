//! Versioned JSON model files. Every real number is written as a decimal
//! string with 17 significant digits so a reload is bit-exact.

use serde::{Deserialize, Serialize};

use super::model::{Classifier, FeatureCpd, ModelKind, ModelStructure};
use crate::data::Schema;
use crate::error::{Error, Result};
use crate::estimation::{GaussianCpd, MultinomialCpd};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    schema: serde_json::Value,
    r_h: usize,
    alpha: String,
    parameters: Parameters,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Parameters {
    class: Table,
    mixing: Option<Table>,
    features: Vec<FeatureTable>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Table {
    configs: usize,
    arity: usize,
    theta: Vec<String>,
    alpha: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum FeatureTable {
    Multinomial {
        variable: String,
        #[serde(flatten)]
        table: Table,
    },
    Gaussian {
        variable: String,
        mean: Vec<String>,
        variance: Vec<String>,
        #[serde(default)]
        fallback: Vec<bool>,
    },
}

fn enc(x: f64) -> String {
    format!("{x:.16e}")
}

fn dec(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Format(format!("`{s}` is not a decimal number")))
}

fn dec_all(xs: &[String]) -> Result<Vec<f64>> {
    xs.iter().map(|s| dec(s)).collect()
}

fn table(cpd: &MultinomialCpd) -> Table {
    Table {
        configs: cpd.configs(),
        arity: cpd.arity(),
        theta: cpd.theta().iter().map(|&x| enc(x)).collect(),
        alpha: cpd.alpha().iter().map(|&x| enc(x)).collect(),
    }
}

fn cpd(t: &Table) -> Result<MultinomialCpd> {
    MultinomialCpd::from_parts(t.arity, t.configs, dec_all(&t.theta)?, dec_all(&t.alpha)?)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json(model: &Classifier) -> String {
    let schema = model.schema();
    let features = model
        .features()
        .iter()
        .zip(model.feature_vars())
        .map(|(f, &var)| {
            let variable = schema.variable(var).name.clone();
            match f {
                FeatureCpd::Discrete(m) => FeatureTable::Multinomial {
                    variable,
                    table: table(m),
                },
                FeatureCpd::Continuous(g) => FeatureTable::Gaussian {
                    variable,
                    mean: g.mean().iter().map(|&x| enc(x)).collect(),
                    variance: g.variance().iter().map(|&x| enc(x)).collect(),
                    fallback: g.fallback().to_vec(),
                },
            }
        })
        .collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        schema: serde_json::from_str(&schema.to_json()).expect("schema json"),
        r_h: model.hidden_arity(),
        alpha: enc(model.structure().alpha),
        parameters: Parameters {
            class: table(model.class_cpd()),
            mixing: model.mixing().map(table),
            features,
        },
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn from_json(text: &str) -> Result<Classifier> {
    let version = serde_json::from_str::<serde_json::Value>(text)
        .map_err(|e| Error::Format(e.to_string()))?
        .get("format_version")
        .and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::Format(format!(
            "unsupported format_version {version:?}, this build reads version {FORMAT_VERSION}"
        )));
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let schema = Schema::from_json(&file.schema.to_string()).map_err(|e| Error::Format(e.to_string()))?;
    let structure = ModelStructure::new(file.kind, schema, file.r_h)
        .and_then(|s| s.with_alpha(dec(&file.alpha)?))
        .map_err(|e| Error::Format(e.to_string()))?;
    let feature_vars = structure.schema.feature_indices();
    if feature_vars.len() != file.parameters.features.len() {
        return Err(Error::Format("feature table count does not match schema".into()));
    }
    let mut features = Vec::with_capacity(feature_vars.len());
    for (t, &var) in file.parameters.features.iter().zip(&feature_vars) {
        let expected = &structure.schema.variable(var).name;
        let (name, f) = match t {
            FeatureTable::Multinomial { variable, table } => (variable, FeatureCpd::Discrete(cpd(table)?)),
            FeatureTable::Gaussian {
                variable,
                mean,
                variance,
                fallback,
            } => {
                let fallback = if fallback.is_empty() { vec![false; mean.len()] } else { fallback.clone() };
                if fallback.len() != mean.len() {
                    return Err(Error::Format(format!("fallback flags for `{variable}` have the wrong length")));
                }
                let g = GaussianCpd::with_fallback(dec_all(mean)?, dec_all(variance)?, fallback)
                    .map_err(|e| Error::Format(e.to_string()))?;
                (variable, FeatureCpd::Continuous(g))
            }
        };
        if name != expected {
            return Err(Error::Format(format!("feature table `{name}` found where `{expected}` expected")));
        }
        features.push(f);
    }
    let class_cpd = cpd(&file.parameters.class)?;
    let mixing = file.parameters.mixing.as_ref().map(cpd).transpose()?;
    Classifier::new(structure, class_cpd, mixing, features).map_err(|e| Error::Format(e.to_string()))
}
