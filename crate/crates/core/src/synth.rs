//! Seeded synthetic tables shaped like small process-parameter datasets:
//! a few numeric settings, a few categorical choices and one measured
//! label.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{ColumnKind, ColumnSpec, RawTable, Schema};
use crate::seed;

pub const MIN_ROWS: usize = 10;
pub const LABEL_COLUMN: &str = "y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFn {
    /// `Σ w_i x_i` plus per-category offsets.
    #[default]
    Linear,
    /// `Σ w_i x_i²` plus offsets.
    Quadratic,
    /// `Σ w_i x_i x_{i+1}` plus a linear term and offsets.
    Interaction,
}

impl FromStr for LabelFn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(LabelFn::Linear),
            "quadratic" => Ok(LabelFn::Quadratic),
            "interaction" => Ok(LabelFn::Interaction),
            other => Err(format!("unknown label function {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub numeric: usize,
    pub categoricals: Vec<CategoricalSpec>,
    #[serde(default)]
    pub label: LabelFn,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 120 rows, 4 numeric columns, `gas` with 3 levels and `metal` with
    /// 4, linear label with noise std 0.1.
    pub fn canonical(seed: u64) -> Self {
        SyntheticSpec {
            rows: 120,
            numeric: 4,
            categoricals: vec![
                CategoricalSpec {
                    name: "gas".into(),
                    arity: 3,
                },
                CategoricalSpec {
                    name: "metal".into(),
                    arity: 4,
                },
            ],
            label: LabelFn::Linear,
            noise_std: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < MIN_ROWS {
            return Err(Error::Config(format!("synthetic tables need at least {MIN_ROWS} rows")));
        }
        if self.numeric == 0 && self.categoricals.is_empty() {
            return Err(Error::Config("synthetic table needs at least one feature".into()));
        }
        if let Some(c) = self.categoricals.iter().find(|c| c.arity < 2) {
            return Err(Error::Config(format!("categorical {:?} needs arity >= 2", c.name)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        let schema = self.schema();
        schema.validate()
    }

    pub fn schema(&self) -> Schema {
        let mut columns: Vec<ColumnSpec> = (1..=self.numeric)
            .map(|i| ColumnSpec {
                name: format!("x{i}"),
                kind: ColumnKind::Numeric,
            })
            .collect();
        columns.extend(self.categoricals.iter().map(|c| ColumnSpec {
            name: c.name.clone(),
            kind: ColumnKind::Categorical,
        }));
        columns.push(ColumnSpec {
            name: LABEL_COLUMN.into(),
            kind: ColumnKind::Label,
        });
        Schema {
            columns,
            label: LABEL_COLUMN.into(),
        }
    }

    fn level_name(&self, cat: usize, level: usize) -> String {
        format!("{}{}", self.categoricals[cat].name, level)
    }
}

/// Generated table in cell form, header first.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTable {
    pub schema: Schema,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SyntheticTable {
    pub fn to_raw(&self) -> Result<RawTable> {
        let rows = self.rows.iter().map(|r| r.iter().cloned().map(Some).collect()).collect();
        RawTable::new(&self.schema, rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io("<synthetic csv>", e))?;
        Ok(())
    }

    pub fn schema_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.schema)? + "\n")
    }

    /// Writes the CSV and its schema sidecar.
    pub fn write_files(&self, csv_path: &Path, schema_path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(csv_path, buf).map_err(|e| Error::io(csv_path, e))?;
        std::fs::write(schema_path, self.schema_json()?).map_err(|e| Error::io(schema_path, e))
    }
}

fn signed_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let w = rng.gen_range(0.5..1.5);
    if rng.gen_bool(0.5) {
        w
    } else {
        -w
    }
}

/// Draws the table. Numeric features are standard normal, categories
/// uniform, and the label a smooth function of both plus Gaussian noise.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticTable> {
    spec.validate()?;
    let mut coef_rng = seed::stage_rng(spec.seed, "synth-coefficients");
    let weights: Vec<f64> = (0..spec.numeric).map(|_| signed_weight(&mut coef_rng)).collect();
    let offsets: Vec<Vec<f64>> = spec
        .categoricals
        .iter()
        .map(|c| (0..c.arity).map(|_| coef_rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let mut rng = seed::stage_rng(spec.seed, "synth-rows");
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let schema = spec.schema();
    let header = schema.columns.iter().map(|c| c.name.clone()).collect();
    let mut rows = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let x: Vec<f64> = (0..spec.numeric).map(|_| StandardNormal.sample(&mut rng)).collect();
        let levels: Vec<usize> = spec.categoricals.iter().map(|c| rng.gen_range(0..c.arity)).collect();
        let mut y: f64 = match spec.label {
            LabelFn::Linear => weights.iter().zip(&x).map(|(w, v)| w * v).sum(),
            LabelFn::Quadratic => weights.iter().zip(&x).map(|(w, v)| w * v * v).sum(),
            LabelFn::Interaction => {
                let linear: f64 = weights.iter().zip(&x).map(|(w, v)| 0.5 * w * v).sum();
                let pairs: f64 = (0..spec.numeric.saturating_sub(1))
                    .map(|i| weights[i] * x[i] * x[i + 1])
                    .sum();
                linear + pairs
            }
        };
        y += levels.iter().zip(&offsets).map(|(&l, o)| o[l]).sum::<f64>();
        y += noise.sample(&mut rng);

        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.extend(levels.iter().enumerate().map(|(c, &l)| spec.level_name(c, l)));
        row.push(y.to_string());
        rows.push(row);
    }
    Ok(SyntheticTable { schema, header, rows })
}
