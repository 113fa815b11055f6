use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Sidecar schema describing a CSV file: `{"columns": [{name, kind}], "label": name}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub label: String,
}

impl Schema {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: Schema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    /// Exactly one label column, named by `label`, and unique names.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column {:?}", c.name)));
            }
        }
        let labels: Vec<&ColumnSpec> = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label || c.name == self.label)
            .collect();
        match labels.as_slice() {
            [only] if only.name == self.label => Ok(()),
            [] => Err(Error::Schema(format!("label column {:?} not declared", self.label))),
            [only] => Err(Error::Schema(format!(
                "column {:?} has kind label but the label is {:?}",
                only.name, self.label
            ))),
            _ => Err(Error::Schema("more than one label column".into())),
        }
    }

    /// Column specs with the label column's kind normalized to `Label`.
    fn resolved_columns(&self) -> Vec<ColumnSpec> {
        self.columns
            .iter()
            .map(|c| ColumnSpec {
                name: c.name.clone(),
                kind: if c.name == self.label { ColumnKind::Label } else { c.kind },
            })
            .collect()
    }
}

/// Raw records as read from disk. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<ColumnSpec>,
    rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn new(schema: &Schema, rows: Vec<Vec<Option<String>>>) -> Result<Self> {
        schema.validate()?;
        let columns = schema.resolved_columns();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
        }
        Ok(RawTable { columns, rows })
    }

    /// Reads a headered UTF-8 CSV. Columns are matched to the schema by
    /// name; empty cells become missing values; extra columns are ignored.
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let positions = schema
            .columns
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h.trim() == c.name)
                    .ok_or_else(|| Error::Schema(format!("column {:?} missing from CSV header", c.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = positions
                .iter()
                .map(|&p| {
                    let cell = record.get(p).unwrap_or("").trim();
                    (!cell.is_empty()).then(|| cell.to_string())
                })
                .collect();
            rows.push(row);
        }
        RawTable::new(schema, rows)
    }

    pub fn from_csv_path(path: &Path, schema: &Schema) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, schema)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated table has a label column")
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Values of one column, failing on any missing cell.
    pub(crate) fn numeric_column(&self, col: usize) -> Result<Vec<f64>> {
        let name = &self.columns[col].name;
        self.rows
            .iter()
            .map(|row| match &row[col] {
                Some(cell) => parse_number(name, cell),
                None => Err(Error::Schema(format!("missing cell in column {name:?}; clean the table first"))),
            })
            .collect()
    }

    pub(crate) fn text_column(&self, col: usize) -> Result<Vec<&str>> {
        let name = &self.columns[col].name;
        self.rows
            .iter()
            .map(|row| {
                row[col]
                    .as_deref()
                    .ok_or_else(|| Error::Schema(format!("missing cell in column {name:?}; clean the table first")))
            })
            .collect()
    }
}

pub(crate) fn parse_number(column: &str, cell: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Drops every row with a missing cell, keeping survivors in order.
pub fn clean(table: &RawTable) -> Result<RawTable> {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|row| row.iter().all(Option::is_some))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dropped = table.len() - rows.len();
    if dropped > 0 {
        log::info!("cleaning removed {dropped} incomplete rows");
    }
    Ok(RawTable {
        columns: table.columns.clone(),
        rows,
    })
}
