use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VariableKind {
    Discrete { values: Vec<String> },
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    #[serde(flatten)]
    pub kind: VariableKind,
}

impl VariableDecl {
    pub fn discrete<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Discrete {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Continuous,
        }
    }

    /// Number of values for a discrete variable, `None` for a continuous one.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            VariableKind::Discrete { values } => Some(values.len()),
            VariableKind::Continuous => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VariableKind::Continuous)
    }

    pub fn labels(&self) -> &[String] {
        match &self.kind {
            VariableKind::Discrete { values } => values,
            VariableKind::Continuous => &[],
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|v| v == label)
    }
}

/// Ordered variable declarations with one designated discrete class variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    variables: Vec<VariableDecl>,
    class_index: usize,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    class: String,
    variables: Vec<VariableDecl>,
}

impl Schema {
    pub fn new(variables: Vec<VariableDecl>, class_index: usize) -> Result<Self> {
        if class_index >= variables.len() {
            return invalid(format!(
                "class index {class_index} out of range for {} variables",
                variables.len()
            ));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return invalid(format!("duplicate variable name `{}`", v.name));
            }
            if v.name.is_empty() || v.name.contains(',') {
                return invalid(format!("variable name `{}` is not a valid identifier", v.name));
            }
            if let VariableKind::Discrete { values } = &v.kind {
                if values.len() < 2 {
                    return invalid(format!("discrete variable `{}` needs at least 2 values", v.name));
                }
                let mut labels = HashSet::new();
                for label in values {
                    if !labels.insert(label.as_str()) {
                        return invalid(format!("variable `{}` repeats label `{label}`", v.name));
                    }
                }
            }
        }
        if variables[class_index].is_continuous() {
            return invalid(format!(
                "class variable `{}` must be discrete",
                variables[class_index].name
            ));
        }
        Ok(Self {
            variables,
            class_index,
        })
    }

    /// Builds a schema whose class variable is found by name.
    pub fn with_class_name(variables: Vec<VariableDecl>, class: &str) -> Result<Self> {
        let idx = variables
            .iter()
            .position(|v| v.name == class)
            .ok_or_else(|| Error::InvalidArgument(format!("class variable `{class}` not declared")))?;
        Self::new(variables, idx)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SchemaFile = serde_json::from_str(text)?;
        Self::with_class_name(raw.variables, &raw.class)
    }

    pub fn to_json(&self) -> String {
        let raw = SchemaFile {
            class: self.class().name.clone(),
            variables: self.variables.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("schema serializes")
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variable(&self, idx: usize) -> &VariableDecl {
        &self.variables[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn class(&self) -> &VariableDecl {
        &self.variables[self.class_index]
    }

    pub fn class_arity(&self) -> usize {
        self.class().arity().expect("class is discrete")
    }

    /// Indices of every non-class variable, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&i| i != self.class_index)
            .collect()
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&i| self.variables[i].is_continuous())
            .collect()
    }

    /// Returns a copy with variable `idx` replaced.
    pub(crate) fn replace_variable(&self, idx: usize, decl: VariableDecl) -> Result<Self> {
        let mut vars = self.variables.clone();
        vars[idx] = decl;
        Self::new(vars, self.class_index)
    }
}
