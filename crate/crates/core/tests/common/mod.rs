#![allow(dead_code)]

use mixfan::classifier::FeatureCpd;
use mixfan::data::VariableDecl;
use mixfan::estimation::MultinomialCpd;
use mixfan::{Classifier, EmConfig, ModelKind, ModelStructure, Schema};

/// Binary class followed by `discrete` binary features and `continuous`
/// real features.
pub fn mixed_schema(discrete: usize, continuous: usize) -> Schema {
    let mut vars = vec![VariableDecl::discrete("class", ["a", "b"])];
    for i in 0..discrete {
        vars.push(VariableDecl::discrete(format!("d{i}"), ["0", "1"]));
    }
    for i in 0..continuous {
        vars.push(VariableDecl::continuous(format!("x{i}")));
    }
    Schema::new(vars, 0).unwrap()
}

pub fn binary_schema(features: usize) -> Schema {
    mixed_schema(features, 0)
}

pub fn random_model(kind: ModelKind, schema: &Schema, r_h: usize, seed: u64) -> Classifier {
    let structure = ModelStructure::new(kind, schema.clone(), r_h).unwrap();
    Classifier::random(&structure, seed).unwrap()
}

pub fn quick_em(seed: u64) -> EmConfig {
    EmConfig {
        max_iterations: 200,
        tolerance: 1e-8,
        restarts: 2,
        seed,
        ..EmConfig::default()
    }
}

/// All binary feature vectors of length `n`.
pub fn outcomes(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n).map(|m| (0..n).map(|i| (m >> i) & 1).collect()).collect()
}

pub fn table(f: &FeatureCpd) -> &MultinomialCpd {
    match f {
        FeatureCpd::Discrete(m) => m,
        FeatureCpd::Continuous(_) => panic!("discrete table expected"),
    }
}

/// `p(c, x)` computed directly from the probability tables.
pub fn oracle_joint(m: &Classifier, c: usize, xs: &[usize]) -> f64 {
    let r = m.hidden_arity();
    let feats = m.features();
    match m.kind() {
        ModelKind::Nb => {
            m.class_cpd().prob(0, c) * xs.iter().zip(feats).map(|(&x, f)| table(f).prob(c, x)).product::<f64>()
        }
        ModelKind::Fm => (0..r)
            .map(|h| {
                m.mixing().unwrap().prob(0, h)
                    * m.class_cpd().prob(h, c)
                    * xs.iter().zip(feats).map(|(&x, f)| table(f).prob(h, x)).product::<f64>()
            })
            .sum(),
        ModelKind::Fan => {
            m.class_cpd().prob(0, c)
                * (0..r)
                    .map(|h| {
                        m.mixing().unwrap().prob(0, h)
                            * xs.iter().zip(feats).map(|(&x, f)| table(f).prob(c * r + h, x)).product::<f64>()
                    })
                    .sum::<f64>()
        }
    }
}

/// All-discrete FAN from explicit tables; `features[i][c * r + h]` is the
/// distribution of feature `i` under that configuration.
pub fn fan_from_tables(
    schema: &Schema,
    r: usize,
    class: Vec<f64>,
    mixing: Vec<f64>,
    features: Vec<Vec<Vec<f64>>>,
) -> Classifier {
    let structure = ModelStructure::new(ModelKind::Fan, schema.clone(), r).unwrap();
    Classifier::new(
        structure,
        MultinomialCpd::from_rows(&[class], 1.0).unwrap(),
        Some(MultinomialCpd::from_rows(&[mixing], 1.0).unwrap()),
        features
            .into_iter()
            .map(|rows| FeatureCpd::Discrete(MultinomialCpd::from_rows(&rows, 1.0).unwrap()))
            .collect(),
    )
    .unwrap()
}
