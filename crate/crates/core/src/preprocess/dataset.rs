use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::seed;

/// Where a row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Vae,
    Noise,
}

impl Origin {
    pub fn is_real(self) -> bool {
        self == Origin::Real
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Real => "real",
            Origin::Vae => "vae",
            Origin::Noise => "noise",
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Origin::Real),
            "vae" => Ok(Origin::Vae),
            "noise" => Ok(Origin::Noise),
            other => Err(Error::Parse {
                column: "origin".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Standardized design matrix, labels, and per-row origin flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<f64>,
    origins: Vec<Origin>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<f64>, origins: Vec<Origin>) -> Result<Self> {
        if labels.len() != features.rows() || origins.len() != features.rows() {
            return Err(Error::Shape {
                op: "dataset",
                left: features.shape(),
                right: (labels.len(), origins.len()),
            });
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("dataset labels".into()));
        }
        features.check_finite("dataset features")?;
        Ok(Dataset {
            features,
            labels,
            origins,
        })
    }

    pub fn empty(dims: usize) -> Self {
        Dataset {
            features: Matrix::zeros(0, dims),
            labels: Vec::new(),
            origins: Vec::new(),
        }
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.cols()
    }

    pub fn all_real(&self) -> bool {
        self.origins.iter().all(|o| o.is_real())
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            origins: indices.iter().map(|&i| self.origins[i]).collect(),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let features = self.features.vstack(&other.features)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut origins = self.origins.clone();
        origins.extend_from_slice(&other.origins);
        Ok(Dataset {
            features,
            labels,
            origins,
        })
    }

    /// Writes `origin`, one column per feature dimension, then `label`.
    pub fn write_csv<W: Write>(&self, writer: W, feature_names: &[String]) -> Result<()> {
        if feature_names.len() != self.dims() {
            return Err(Error::Shape {
                op: "write_csv",
                left: (feature_names.len(), 0),
                right: self.features.shape(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["origin".to_string()];
        header.extend(feature_names.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for ((row, label), origin) in self.features.iter_rows().zip(&self.labels).zip(&self.origins) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(origin.to_string());
            rec.extend(row.iter().map(f64::to_string));
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the layout written by [`Dataset::write_csv`]; returns the
    /// dataset and its feature names.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Dataset, Vec<String>)> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[0] != "origin" || header[header.len() - 1] != "label" {
            return Err(Error::Schema(format!("expected origin,<features>,label header, got {header:?}")));
        }
        let names = header[1..header.len() - 1].to_vec();
        let (mut data, mut labels, mut origins) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Schema(format!("row has {} cells, expected {}", rec.len(), header.len())));
            }
            origins.push(rec[0].parse()?);
            for (i, cell) in rec.iter().enumerate().skip(1) {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    column: header[i].clone(),
                    value: cell.into(),
                })?;
                if i == header.len() - 1 {
                    labels.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        let features = Matrix::from_vec(labels.len(), names.len(), data)?;
        Ok((Dataset::new(features, labels, origins)?, names))
    }
}

/// Number of training rows for a table of `n`: `floor(0.67 n)`, at least 1.
pub fn train_size(n: usize) -> usize {
    ((67 * n) / 100).max(1)
}

/// Seeded 67/33 partition of `0..n` into (train, test) indices.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 3 {
        return Err(Error::TooSmall(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let test = idx.split_off(train_size(n));
    Ok((idx, test))
}

pub fn split(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(n: usize) -> Dataset {
        let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::new(features, (0..n).map(|i| i as f64).collect(), vec![Origin::Real; n]).unwrap()
    }

    #[test]
    fn split_sizes() {
        assert_eq!(train_size(100), 67);
        let (tr, te) = split(&ds(100), 1).unwrap();
        assert_eq!((tr.len(), te.len()), (67, 33));
        let (tr, te) = split(&ds(3), 1).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 1));
    }

    #[test]
    fn split_is_seeded() {
        let d = ds(50);
        assert_eq!(split(&d, 9).unwrap(), split(&d, 9).unwrap());
        assert_ne!(split(&d, 9).unwrap().0, split(&d, 10).unwrap().0);
    }

    #[test]
    fn split_too_small() {
        assert!(matches!(split(&ds(2), 0), Err(Error::TooSmall(2))));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(Dataset::new(Matrix::zeros(2, 1), vec![0.0], vec![Origin::Real; 2]).is_err());
    }

    #[test]
    fn csv_has_origin_column() {
        let d = ds(2);
        let mut buf = Vec::new();
        d.write_csv(&mut buf, &["a".into()]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "origin,a,label\nreal,0,0\nreal,1,1\n");
    }

    #[test]
    fn csv_reads_back() {
        let text = "origin,a,b,label\nreal,0.5,1,2\nvae,-1e-3,0,0.25\n";
        let (d, names) = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(d.origins(), [Origin::Real, Origin::Vae]);
        assert_eq!(d.labels(), [2.0, 0.25]);
        assert_eq!(d.features().row(1), [-1e-3, 0.0]);
        assert!(Dataset::read_csv("a,label\n1,2\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("origin,a,label\nfake,1,2\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("origin,a,label\nreal,x,2\n".as_bytes()).is_err());
    }
}
