//! Class-based entropy discretization with the minimum description length
//! stopping rule (recursive binary splitting).

use serde::{Deserialize, Serialize};

use super::dataset::{Case, Cell, Dataset};
use super::schema::VariableDecl;
use crate::error::{invalid, Error, Result};

/// Cut points for one variable. `b` cuts give `b + 1` bins; bin `i` covers
/// `[cuts[i-1], cuts[i])` with open ends at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCuts {
    pub variable: String,
    pub cuts: Vec<f64>,
}

impl VariableCuts {
    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin_of(&self, value: f64) -> usize {
        self.cuts.partition_point(|&c| c <= value)
    }

    pub fn bin_labels(&self) -> Vec<String> {
        if self.cuts.is_empty() {
            return vec!["all".to_string()];
        }
        let mut labels = Vec::with_capacity(self.bin_count());
        labels.push(format!("(-inf;{})", self.cuts[0]));
        for w in self.cuts.windows(2) {
            labels.push(format!("[{};{})", w[0], w[1]));
        }
        labels.push(format!("[{};inf)", self.cuts[self.cuts.len() - 1]));
        labels
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationMap {
    pub variables: Vec<VariableCuts>,
}

impl DiscretizationMap {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: DiscretizationMap = serde_json::from_str(text)?;
        for v in &map.variables {
            if v.cuts.windows(2).any(|w| w[0] >= w[1]) || v.cuts.iter().any(|c| !c.is_finite()) {
                return invalid(format!("cut points for `{}` are not strictly increasing", v.variable));
            }
        }
        Ok(map)
    }

    pub fn get(&self, name: &str) -> Option<&VariableCuts> {
        self.variables.iter().find(|v| v.variable == name)
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn distinct(counts: &[usize]) -> usize {
    counts.iter().filter(|&&c| c > 0).count()
}

/// Learns cut points for continuous variable `var` from the class labels.
pub fn discretize_supervised(ds: &Dataset, var: usize) -> Result<VariableCuts> {
    let schema = ds.schema();
    if var >= schema.len() || !schema.variable(var).is_continuous() {
        return invalid(format!("variable {var} is not a continuous variable"));
    }
    let mut pairs = Vec::with_capacity(ds.len());
    for (l, case) in ds.cases().iter().enumerate() {
        if let Cell::Continuous(v) = case.get(var) {
            let c = ds.class_of(l).ok_or_else(|| {
                Error::InvalidArgument(format!("case {} has a missing class value", l + 1))
            })?;
            pairs.push((v, c));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cuts = Vec::new();
    split_recursive(&pairs, schema.class_arity(), &mut cuts);
    cuts.sort_by(f64::total_cmp);
    Ok(VariableCuts {
        variable: schema.variable(var).name.clone(),
        cuts,
    })
}

fn split_recursive(pairs: &[(f64, usize)], classes: usize, cuts: &mut Vec<f64>) {
    let n = pairs.len();
    if n < 2 {
        return;
    }
    let mut total = vec![0usize; classes];
    for &(_, c) in pairs {
        total[c] += 1;
    }
    let ent = entropy(&total, n);
    if ent == 0.0 {
        return;
    }

    let mut left = vec![0usize; classes];
    let mut right = total.clone();
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for i in 1..n {
        let c = pairs[i - 1].1;
        left[c] += 1;
        right[c] -= 1;
        if pairs[i - 1].0 == pairs[i].0 {
            continue;
        }
        let e = (i as f64 * entropy(&left, i) + (n - i) as f64 * entropy(&right, n - i)) / n as f64;
        if best.as_ref().is_none_or(|b| e < b.1) {
            best = Some((i, e, left.clone()));
        }
    }
    let Some((i, e, left)) = best else {
        return;
    };
    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    let (k, k1, k2) = (distinct(&total) as f64, distinct(&left) as f64, distinct(&right) as f64);
    let (e1, e2) = (entropy(&left, i), entropy(&right, n - i));
    let delta = (3f64.powf(k) - 2.0).log2() - (k * ent - k1 * e1 - k2 * e2);
    let gain = ent - e;
    let threshold = (((n - 1) as f64).log2() + delta) / n as f64;
    if gain <= threshold {
        return;
    }
    cuts.push(0.5 * (pairs[i - 1].0 + pairs[i].0));
    split_recursive(&pairs[..i], classes, cuts);
    split_recursive(&pairs[i..], classes, cuts);
}

/// Learns cut points for every continuous variable of `ds`.
pub fn fit_discretization(ds: &Dataset) -> Result<DiscretizationMap> {
    let variables = ds
        .schema()
        .continuous_indices()
        .into_iter()
        .map(|v| discretize_supervised(ds, v))
        .collect::<Result<_>>()?;
    Ok(DiscretizationMap { variables })
}

/// Replaces each mapped continuous variable by its bin index.
pub fn apply_discretization(ds: &Dataset, map: &DiscretizationMap) -> Result<Dataset> {
    let mut schema = ds.schema().clone();
    let mut targets = Vec::new();
    for cuts in &map.variables {
        let idx = schema.index_of(&cuts.variable).ok_or_else(|| {
            Error::Structure(format!("map names unknown variable `{}`", cuts.variable))
        })?;
        if !schema.variable(idx).is_continuous() {
            return Err(Error::Structure(format!("variable `{}` is not continuous", cuts.variable)));
        }
        let labels = cuts.bin_labels();
        // A one-bin variable is still declared with two labels so the schema
        // arity invariant holds; the second label never occurs.
        let labels = if labels.len() == 1 {
            vec!["all".to_string(), "unused".to_string()]
        } else {
            labels
        };
        schema = schema.replace_variable(idx, VariableDecl::discrete(cuts.variable.clone(), labels))?;
        targets.push((idx, cuts));
    }
    let cases = ds
        .cases()
        .iter()
        .map(|case| {
            let mut cells = case.cells().to_vec();
            for &(idx, cuts) in &targets {
                if let Cell::Continuous(v) = cells[idx] {
                    cells[idx] = Cell::Discrete(cuts.bin_of(v));
                }
            }
            Case(cells)
        })
        .collect();
    Ok(Dataset::from_parts_unchecked(schema, cases))
}
