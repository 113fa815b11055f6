use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Origin};
use super::table::{parse_number, ColumnKind, RawTable};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Spread below which a column counts as constant.
const MIN_STD: f64 = 1e-12;

/// Z-score parameters `z = (x - mean) / std` with population std.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Standardizer {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Standardizer {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn encode(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn decode(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureCodec {
    Numeric {
        column: String,
        scale: Standardizer,
    },
    /// One-hot block; each indicator dimension is standardized on its own.
    Categorical {
        column: String,
        vocabulary: Vec<String>,
        scales: Vec<Standardizer>,
    },
}

impl FeatureCodec {
    pub fn column(&self) -> &str {
        match self {
            FeatureCodec::Numeric { column, .. } | FeatureCodec::Categorical { column, .. } => column,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureCodec::Numeric { .. } => 1,
            FeatureCodec::Categorical { vocabulary, .. } => vocabulary.len(),
        }
    }
}

/// Fitted standardization for features and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codec {
    pub features: Vec<FeatureCodec>,
    pub label_column: String,
    pub label: Standardizer,
    /// Columns dropped during fitting, with the reason.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Codec {
    /// Fits on a cleaned table. Constant numeric columns and single-category
    /// columns are dropped with a warning.
    pub fn fit(table: &RawTable) -> Result<Codec> {
        let mut features = Vec::new();
        let mut warnings = Vec::new();
        for (col, spec) in table.columns().iter().enumerate() {
            match spec.kind {
                ColumnKind::Label => {}
                ColumnKind::Numeric => {
                    let values = table.numeric_column(col)?;
                    let scale = Standardizer::fit(&values);
                    if scale.std < MIN_STD {
                        warnings.push(format!("dropped constant column {:?}", spec.name));
                        continue;
                    }
                    features.push(FeatureCodec::Numeric {
                        column: spec.name.clone(),
                        scale,
                    });
                }
                ColumnKind::Categorical => {
                    let values = table.text_column(col)?;
                    let mut vocabulary: Vec<String> = Vec::new();
                    for v in &values {
                        if !vocabulary.iter().any(|w| w == v) {
                            vocabulary.push(v.to_string());
                        }
                    }
                    if vocabulary.len() < 2 {
                        warnings.push(format!("dropped single-category column {:?}", spec.name));
                        continue;
                    }
                    let scales = (0..vocabulary.len())
                        .map(|k| {
                            let indicator: Vec<f64> = values
                                .iter()
                                .map(|v| if *v == vocabulary[k] { 1.0 } else { 0.0 })
                                .collect();
                            Standardizer::fit(&indicator)
                        })
                        .collect();
                    features.push(FeatureCodec::Categorical {
                        column: spec.name.clone(),
                        vocabulary,
                        scales,
                    });
                }
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        let label_col = table.label_index();
        let label = Standardizer::fit(&table.numeric_column(label_col)?);
        if label.std < MIN_STD {
            return Err(Error::Degenerate("label column is constant".into()));
        }
        Ok(Codec {
            features,
            label_column: table.columns()[label_col].name.clone(),
            label,
            warnings,
        })
    }

    /// Total encoded feature dimension.
    pub fn dims(&self) -> usize {
        self.features.iter().map(FeatureCodec::width).sum()
    }

    /// One name per encoded dimension; one-hot dimensions read `column=value`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dims());
        for f in &self.features {
            match f {
                FeatureCodec::Numeric { column, .. } => names.push(column.clone()),
                FeatureCodec::Categorical {
                    column, vocabulary, ..
                } => names.extend(vocabulary.iter().map(|v| format!("{column}={v}"))),
            }
        }
        names
    }

    /// Encoded dimension ranges of each categorical block.
    pub fn categorical_blocks(&self) -> Vec<Range<usize>> {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for f in &self.features {
            let w = f.width();
            if matches!(f, FeatureCodec::Categorical { .. }) {
                blocks.push(offset..offset + w);
            }
            offset += w;
        }
        blocks
    }

    /// Standardizes a table into a dataset of `real` rows.
    pub fn encode(&self, table: &RawTable) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(self.features.len());
        for f in &self.features {
            let idx = table
                .column_index(f.column())
                .ok_or_else(|| Error::Schema(format!("column {:?} not in table", f.column())))?;
            columns.push(idx);
        }
        let label_idx = table
            .column_index(&self.label_column)
            .ok_or_else(|| Error::Schema(format!("label column {:?} not in table", self.label_column)))?;

        let dims = self.dims();
        let mut data = Vec::with_capacity(table.len() * dims);
        let mut labels = Vec::with_capacity(table.len());
        for row in table.rows() {
            for (f, &col) in self.features.iter().zip(&columns) {
                let cell = row[col]
                    .as_deref()
                    .ok_or_else(|| Error::Schema(format!("missing cell in column {:?}", f.column())))?;
                match f {
                    FeatureCodec::Numeric { column, scale } => {
                        data.push(scale.encode(parse_number(column, cell)?));
                    }
                    FeatureCodec::Categorical {
                        column,
                        vocabulary,
                        scales,
                    } => {
                        let hit = vocabulary
                            .iter()
                            .position(|v| v == cell)
                            .ok_or_else(|| Error::UnknownCategory {
                                column: column.clone(),
                                value: cell.to_string(),
                            })?;
                        for (k, s) in scales.iter().enumerate() {
                            data.push(s.encode(if k == hit { 1.0 } else { 0.0 }));
                        }
                    }
                }
            }
            let cell = row[label_idx]
                .as_deref()
                .ok_or_else(|| Error::Schema("missing label cell".into()))?;
            labels.push(self.label.encode(parse_number(&self.label_column, cell)?));
        }
        let features = Matrix::from_vec(table.len(), dims, data)?;
        let origins = vec![Origin::Real; labels.len()];
        Dataset::new(features, labels, origins)
    }

    pub fn decode_label(&self, z: f64) -> f64 {
        self.label.decode(z)
    }

    /// Maps an encoded feature row back to raw cells. Categorical blocks
    /// decode to the category with the largest raw indicator.
    pub fn decode_row(&self, row: &[f64]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.features.len());
        let mut offset = 0;
        for f in &self.features {
            match f {
                FeatureCodec::Numeric { scale, .. } => {
                    out.push(scale.decode(row[offset]).to_string());
                }
                FeatureCodec::Categorical {
                    vocabulary, scales, ..
                } => {
                    let best = argmax_raw(&row[offset..offset + scales.len()], scales);
                    out.push(vocabulary[best].clone());
                }
            }
            offset += f.width();
        }
        out
    }

    /// Rounds every categorical block of `features` to the encoding of a
    /// proper one-hot vector (argmax of the raw indicators).
    pub fn snap_onehot(&self, features: &mut Matrix) {
        let mut offset = 0;
        for f in &self.features {
            if let FeatureCodec::Categorical { scales, .. } = f {
                for r in 0..features.rows() {
                    let block = &mut features.row_mut(r)[offset..offset + scales.len()];
                    let best = argmax_raw(block, scales);
                    for (k, (v, s)) in block.iter_mut().zip(scales).enumerate() {
                        *v = s.encode(if k == best { 1.0 } else { 0.0 });
                    }
                }
            }
            offset += f.width();
        }
    }
}

fn argmax_raw(block: &[f64], scales: &[Standardizer]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, (&z, s)) in block.iter().zip(scales).enumerate() {
        let raw = s.decode(z);
        if raw > best_val {
            best_val = raw;
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::table::Schema;

    fn table(rows: &[[&str; 3]]) -> RawTable {
        let schema: Schema = serde_json::from_str(
            r#"{"columns":[{"name":"x","kind":"numeric"},{"name":"metal","kind":"categorical"},{"name":"y","kind":"label"}],"label":"y"}"#,
        )
        .unwrap();
        RawTable::new(
            &schema,
            rows.iter().map(|r| r.iter().map(|c| Some(c.to_string())).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn numeric_population_std() {
        let s = Standardizer::fit(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn z_score_reference_points() {
        let s = Standardizer { mean: 4.0, std: 2.5 };
        assert_eq!(s.encode(4.0), 0.0);
        assert_eq!(s.encode(6.5), 1.0);
    }

    #[test]
    fn vocabulary_follows_first_appearance() {
        let t = table(&[["1", "Ti", "1"], ["2", "Al", "2"], ["3", "Ti", "4"]]);
        let codec = Codec::fit(&t).unwrap();
        let FeatureCodec::Categorical { vocabulary, scales, .. } = &codec.features[1] else {
            panic!("expected categorical")
        };
        assert_eq!(vocabulary, &["Ti", "Al"]);
        // raw one-hot rows [1,0],[0,1],[1,0] decode back from the encoding
        let ds = codec.encode(&t).unwrap();
        let raw: Vec<Vec<f64>> = ds
            .features()
            .iter_rows()
            .map(|r| r[1..3].iter().zip(scales).map(|(z, s)| s.decode(*z)).collect())
            .collect();
        let expect = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        for (got, want) in raw.iter().zip(expect) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
        assert_eq!(codec.feature_names(), ["x", "metal=Ti", "metal=Al"]);
        assert_eq!(codec.categorical_blocks(), vec![1..3]);
    }

    #[test]
    fn constant_columns_are_dropped_with_warning() {
        let t = table(&[["5", "Ti", "1"], ["5", "Ti", "2"], ["5", "Ti", "3"]]);
        let codec = Codec::fit(&t).unwrap();
        assert!(codec.features.is_empty());
        assert_eq!(codec.warnings.len(), 2);
        assert!(codec.warnings[0].contains("\"x\""));
    }

    #[test]
    fn constant_label_is_rejected() {
        let t = table(&[["1", "Ti", "3"], ["2", "Al", "3"]]);
        assert!(matches!(Codec::fit(&t), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unknown_category_names_column_and_value() {
        let train = table(&[["1", "Ti", "1"], ["2", "Al", "2"]]);
        let codec = Codec::fit(&train).unwrap();
        let test = table(&[["1", "Au", "1"]]);
        match codec.encode(&test) {
            Err(Error::UnknownCategory { column, value }) => {
                assert_eq!(column, "metal");
                assert_eq!(value, "Au");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_label_inverts() {
        let codec = Codec {
            features: vec![],
            label_column: "y".into(),
            label: Standardizer { mean: 10.0, std: 2.0 },
            warnings: vec![],
        };
        assert_eq!(codec.decode_label(0.0), 10.0);
        assert_eq!(codec.decode_label(1.0), 12.0);
    }

    #[test]
    fn snap_restores_one_hot_blocks() {
        let t = table(&[["1", "Ti", "1"], ["2", "Al", "2"], ["3", "Cu", "4"], ["4", "Ti", "0"]]);
        let codec = Codec::fit(&t).unwrap();
        let encoded = codec.encode(&t).unwrap();
        let mut noisy = encoded.features().map(|v| v + 0.01);
        codec.snap_onehot(&mut noisy);
        for (a, b) in noisy.iter_rows().zip(encoded.features().iter_rows()) {
            for k in 1..4 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
            assert!((a[0] - b[0] - 0.01).abs() < 1e-12);
        }
        assert_eq!(codec.decode_row(noisy.row(2))[1], "Cu");
    }
}
