use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::improvement_pct;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Real training rows only.
    Pure,
    Vae,
    Noise,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pure => "pure",
            Method::Vae => "vae",
            Method::Noise => "noise",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pure" => Ok(Method::Pure),
            "vae" => Ok(Method::Vae),
            "noise" => Ok(Method::Noise),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// Scores of one trained regressor on the real test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    /// Augmentation multiple; 0 for the pure baseline.
    pub scale: usize,
    pub repeat: usize,
    pub seed: u64,
    pub mae: f64,
    /// `None` when the predictions or the test labels have zero variance.
    pub pearson_r: Option<f64>,
    /// Set when the run failed; `mae` is NaN then.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    fn sort_key(&self) -> (Method, usize, usize) {
        (self.method, self.scale, self.repeat)
    }
}

/// One row per `(method, scale)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub scale: usize,
    pub mae_mean: Option<f64>,
    pub mae_min: Option<f64>,
    pub mae_max: Option<f64>,
    pub pearson_mean: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub runs: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    runs: Vec<RunResult>,
}

const FAILED: &str = "failed";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsTable {
    /// Runs are kept in canonical `(method, scale, repeat)` order.
    pub fn new(mut runs: Vec<RunResult>) -> Self {
        runs.sort_by_key(RunResult::sort_key);
        MetricsTable { runs }
    }

    pub fn runs(&self) -> &[RunResult] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.succeeded()).count()
    }

    pub fn group(&self, method: Method, scale: usize) -> impl Iterator<Item = &RunResult> {
        self.runs
            .iter()
            .filter(move |r| r.method == method && r.scale == scale)
    }

    /// Mean MAE over the successful runs of one group.
    pub fn mean_mae(&self, method: Method, scale: usize) -> Option<f64> {
        let maes: Vec<f64> = self.group(method, scale).filter(|r| r.succeeded()).map(|r| r.mae).collect();
        (!maes.is_empty()).then(|| maes.iter().sum::<f64>() / maes.len() as f64)
    }

    pub fn pure_mae(&self) -> Option<f64> {
        self.mean_mae(Method::Pure, 0)
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(Method, usize)> = self.runs.iter().map(|r| (r.method, r.scale)).collect();
        keys.dedup();
        let pure = self.pure_mae();
        keys.into_iter()
            .map(|(method, scale)| {
                let group: Vec<&RunResult> = self.group(method, scale).collect();
                let ok: Vec<&RunResult> = group.iter().copied().filter(|r| r.succeeded()).collect();
                let maes: Vec<f64> = ok.iter().map(|r| r.mae).collect();
                let rs: Vec<f64> = ok.iter().filter_map(|r| r.pearson_r).collect();
                let mae_mean = (!maes.is_empty()).then(|| maes.iter().sum::<f64>() / maes.len() as f64);
                AggregateRow {
                    method,
                    scale,
                    mae_mean,
                    mae_min: maes.iter().copied().reduce(f64::min),
                    mae_max: maes.iter().copied().reduce(f64::max),
                    pearson_mean: (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64),
                    improvement_pct: mae_mean.zip(pure).and_then(|(m, p)| improvement_pct(m, p)),
                    runs: group.len(),
                    failures: group.len() - ok.len(),
                }
            })
            .collect()
    }

    /// `method,scale,repeat,seed,mae,pearson_r`. Failed runs carry `failed`
    /// in both metric cells; an undefined correlation is an empty cell.
    pub fn write_runs_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "scale", "repeat", "seed", "mae", "pearson_r"])?;
        for r in &self.runs {
            let (mae, pr) = match r.failure {
                Some(_) => (FAILED.to_string(), FAILED.to_string()),
                None => (r.mae.to_string(), cell(r.pearson_r)),
            };
            w.write_record([
                r.method.to_string(),
                r.scale.to_string(),
                r.repeat.to_string(),
                r.seed.to_string(),
                mae,
                pr,
            ])?;
        }
        w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
        Ok(())
    }

    /// `method,scale,mae_mean,mae_min,mae_max,pearson_mean,improvement_pct`.
    pub fn write_aggregate_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "method",
            "scale",
            "mae_mean",
            "mae_min",
            "mae_max",
            "pearson_mean",
            "improvement_pct",
        ])?;
        for a in self.aggregate() {
            w.write_record([
                a.method.to_string(),
                a.scale.to_string(),
                cell(a.mae_mean),
                cell(a.mae_min),
                cell(a.mae_max),
                cell(a.pearson_mean),
                cell(a.improvement_pct),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<aggregate csv>", e))?;
        Ok(())
    }

    /// Reads back a file written by [`MetricsTable::write_runs_csv`].
    pub fn read_runs_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut runs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let bad = |what: &str| Error::Schema(format!("metrics csv: bad {what} in {rec:?}"));
            let method: Method = field(0).parse().map_err(|_| bad("method"))?;
            let scale = field(1).parse().map_err(|_| bad("scale"))?;
            let repeat = field(2).parse().map_err(|_| bad("repeat"))?;
            let seed = field(3).parse().map_err(|_| bad("seed"))?;
            let (mae, pearson_r, failure) = if field(4) == FAILED {
                (f64::NAN, None, Some(FAILED.to_string()))
            } else {
                let mae = field(4).parse().map_err(|_| bad("mae"))?;
                let pr = match field(5) {
                    "" => None,
                    s => Some(s.parse().map_err(|_| bad("pearson_r"))?),
                };
                (mae, pr, None)
            };
            runs.push(RunResult {
                method,
                scale,
                repeat,
                seed,
                mae,
                pearson_r,
                failure,
            });
        }
        Ok(MetricsTable::new(runs))
    }

    /// Plain-text per-scale MAE and improvement tables.
    pub fn summary(&self) -> String {
        let agg = self.aggregate();
        let mut methods: Vec<Method> = agg.iter().map(|a| a.method).filter(|m| *m != Method::Pure).collect();
        methods.dedup();
        let mut scales: Vec<usize> = agg.iter().filter(|a| a.method != Method::Pure).map(|a| a.scale).collect();
        scales.sort_unstable();
        scales.dedup();
        let find = |m: Method, k: usize| agg.iter().find(|a| a.method == m && a.scale == k);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let fmt_pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:+.1}%"));

        let mut out = String::new();
        let pure = find(Method::Pure, 0);
        let _ = writeln!(
            out,
            "pure baseline: mean MAE {} (min {}, max {}), mean Pearson r {}",
            fmt(pure.and_then(|p| p.mae_mean)),
            fmt(pure.and_then(|p| p.mae_min)),
            fmt(pure.and_then(|p| p.mae_max)),
            fmt(pure.and_then(|p| p.pearson_mean)),
        );

        let _ = writeln!(out, "\nmean MAE by scale");
        let _ = write!(out, "{:>6}", "scale");
        for m in &methods {
            let _ = write!(out, " {:>10}", m.as_str());
        }
        let _ = writeln!(out, " {:>10}", "pure");
        for &k in &scales {
            let _ = write!(out, "{k:>6}");
            for &m in &methods {
                let _ = write!(out, " {:>10}", fmt(find(m, k).and_then(|a| a.mae_mean)));
            }
            let _ = writeln!(out, " {:>10}", fmt(pure.and_then(|p| p.mae_mean)));
        }

        let _ = writeln!(out, "\nMAE improvement over pure");
        let _ = write!(out, "{:>6}", "scale");
        for m in &methods {
            let _ = write!(out, " {:>10}", m.as_str());
        }
        let _ = writeln!(out);
        for &k in &scales {
            let _ = write!(out, "{k:>6}");
            for &m in &methods {
                let _ = write!(out, " {:>10}", fmt_pct(find(m, k).and_then(|a| a.improvement_pct)));
            }
            let _ = writeln!(out);
        }

        let _ = writeln!(out, "\nmean Pearson r by scale");
        for &k in &scales {
            let _ = write!(out, "{k:>6}");
            for &m in &methods {
                let _ = write!(out, " {:>10}", fmt(find(m, k).and_then(|a| a.pearson_mean)));
            }
            let _ = writeln!(out);
        }

        let failures = self.failures();
        if failures > 0 {
            let _ = writeln!(out, "\n{failures} run(s) failed");
        }
        out
    }
}
