use std::fs;
use std::io::Write;
use std::path::Path;

use super::schema::{Schema, VariableKind};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_MISSING_MARKER: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Discrete(usize),
    Continuous(f64),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn discrete(&self) -> Option<usize> {
        match *self {
            Cell::Discrete(v) => Some(v),
            _ => None,
        }
    }

    pub fn continuous(&self) -> Option<f64> {
        match *self {
            Cell::Continuous(v) => Some(v),
            _ => None,
        }
    }
}

/// One row: one cell per schema variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Case(pub Vec<Cell>);

impl Case {
    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn get(&self, idx: usize) -> Cell {
        self.0[idx]
    }

    /// Same case with cell `idx` replaced.
    pub fn with_cell(&self, idx: usize, cell: Cell) -> Case {
        let mut cells = self.0.clone();
        cells[idx] = cell;
        Case(cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    cases: Vec<Case>,
}

impl Dataset {
    pub fn new(schema: Schema, cases: Vec<Case>) -> Result<Self> {
        for (row, case) in cases.iter().enumerate() {
            check_case(&schema, case, row)?;
        }
        Ok(Self { schema, cases })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn case(&self, idx: usize) -> &Case {
        &self.cases[idx]
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Class index of case `idx`, `None` when the class cell is missing.
    pub fn class_of(&self, idx: usize) -> Option<usize> {
        self.cases[idx].get(self.schema.class_index()).discrete()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            cases: indices.iter().map(|&i| self.cases[i].clone()).collect(),
        }
    }

    /// Concatenates two datasets over the same schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != other.schema {
            return Err(Error::Structure("cannot concatenate datasets with different schemas".into()));
        }
        let mut cases = self.cases.clone();
        cases.extend(other.cases.iter().cloned());
        Ok(Dataset {
            schema: self.schema.clone(),
            cases,
        })
    }

    /// Errors unless every cell is observed. Training uses complete data only.
    pub fn require_complete(&self) -> Result<()> {
        for (row, case) in self.cases.iter().enumerate() {
            if let Some(col) = case.cells().iter().position(Cell::is_missing) {
                return invalid(format!(
                    "case {} has a missing value in `{}`; training data must be complete",
                    row + 1,
                    self.schema.variable(col).name
                ));
            }
        }
        Ok(())
    }

    pub fn counts_per_class(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.class_arity()];
        for l in 0..self.len() {
            if let Some(c) = self.class_of(l) {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, missing_marker: &str) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::parse_csv(&text, schema, missing_marker)
    }

    /// Parses comma-separated text whose first line names the schema
    /// variables in order. No quoting is recognized.
    pub fn parse_csv(text: &str, schema: &Schema, missing_marker: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines
            .next()
            .ok_or_else(|| Error::Structure("empty file: expected a header line".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        if names.len() != schema.len() {
            return Err(Error::Structure(format!(
                "header has {} columns, schema declares {}",
                names.len(),
                schema.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if *name != schema.variable(i).name {
                return Err(Error::Structure(format!(
                    "header column {} is `{name}`, schema expects `{}`",
                    i + 1,
                    schema.variable(i).name
                )));
            }
        }

        let mut cases = Vec::new();
        for (offset, line) in lines.enumerate() {
            let row = offset + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != schema.len() {
                return Err(Error::Structure(format!(
                    "row {row} has {} fields, expected {}",
                    fields.len(),
                    schema.len()
                )));
            }
            let mut cells = Vec::with_capacity(fields.len());
            for (col, field) in fields.into_iter().enumerate() {
                let decl = schema.variable(col);
                let cell = if field == missing_marker {
                    Cell::Missing
                } else {
                    match &decl.kind {
                        VariableKind::Discrete { values } => values
                            .iter()
                            .position(|v| v == field)
                            .map(Cell::Discrete)
                            .ok_or_else(|| Error::Parse {
                                row,
                                column: decl.name.clone(),
                                message: format!("unknown label `{field}`"),
                            })?,
                        VariableKind::Continuous => match field.parse::<f64>() {
                            Ok(v) if v.is_finite() => Cell::Continuous(v),
                            _ => {
                                return Err(Error::Parse {
                                    row,
                                    column: decl.name.clone(),
                                    message: format!("`{field}` is not a finite number"),
                                })
                            }
                        },
                    }
                };
                cells.push(cell);
            }
            cases.push(Case(cells));
        }
        if cases.is_empty() {
            return Err(Error::Structure("file contains no cases".into()));
        }
        Ok(Self {
            schema: schema.clone(),
            cases,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W, missing_marker: &str) -> Result<()> {
        let header: Vec<&str> = self.schema.variables().iter().map(|v| v.name.as_str()).collect();
        writeln!(out, "{}", header.join(","))?;
        for case in &self.cases {
            let fields: Vec<String> = case
                .cells()
                .iter()
                .enumerate()
                .map(|(i, cell)| match *cell {
                    Cell::Discrete(k) => self.schema.variable(i).labels()[k].clone(),
                    Cell::Continuous(v) => format!("{v}"),
                    Cell::Missing => missing_marker.to_string(),
                })
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(schema: Schema, cases: Vec<Case>) -> Self {
        Self { schema, cases }
    }
}

fn check_case(schema: &Schema, case: &Case, row: usize) -> Result<()> {
    if case.0.len() != schema.len() {
        return Err(Error::Structure(format!(
            "case {} has {} cells, schema declares {}",
            row + 1,
            case.0.len(),
            schema.len()
        )));
    }
    for (i, cell) in case.0.iter().enumerate() {
        let decl = schema.variable(i);
        let ok = match (cell, &decl.kind) {
            (Cell::Missing, _) => true,
            (Cell::Discrete(k), VariableKind::Discrete { values }) => *k < values.len(),
            (Cell::Continuous(v), VariableKind::Continuous) => v.is_finite(),
            _ => false,
        };
        if !ok {
            return Err(Error::Structure(format!(
                "case {} has an invalid cell {cell:?} for `{}`",
                row + 1,
                decl.name
            )));
        }
    }
    Ok(())
}
