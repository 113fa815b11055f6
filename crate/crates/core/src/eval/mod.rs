//! Metrics, the repeated experiment protocol and a 2-D projection for
//! inspecting generated rows.

mod experiment;
mod metrics;
mod pca;
mod table;

pub use experiment::{
    build_pool, repeat_seed, run_experiment, run_seed, split_seed, vae_seed, ExperimentConfig, ExperimentOutput,
    ProjectedPool,
};
pub use metrics::{improvement_pct, mae, pearson_r};
pub use pca::{pca_project2d, Projection};
pub use table::{AggregateRow, Method, MetricsTable, RunResult};

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::preprocess::Origin;

/// `x,y,origin`, one line per projected row.
pub fn write_projection_csv<W: Write>(writer: W, projection: &Projection, origins: &[Origin]) -> Result<()> {
    check_origins(projection, origins)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "origin"])?;
    for (row, origin) in projection.coords.iter_rows().zip(origins) {
        w.write_record([row[0].to_string(), row[1].to_string(), origin.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<projection csv>", e))?;
    Ok(())
}

fn check_origins(projection: &Projection, origins: &[Origin]) -> Result<()> {
    if projection.coords.rows() != origins.len() {
        return Err(Error::Shape {
            op: "projection origins",
            left: projection.coords.shape(),
            right: (origins.len(), 1),
        });
    }
    Ok(())
}

fn color(origin: Origin) -> &'static str {
    match origin {
        Origin::Real => "#1f77b4",
        Origin::Vae => "#d62728",
        Origin::Noise => "#7f7f7f",
    }
}

/// Minimal standalone SVG scatter of a projection, colored by origin.
/// Real rows are drawn last so they stay visible.
pub fn projection_svg(projection: &Projection, origins: &[Origin]) -> Result<String> {
    check_origins(projection, origins)?;
    const SIZE: f64 = 480.0;
    const PAD: f64 = 24.0;
    let c = &projection.coords;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for row in c.iter_rows() {
        x0 = x0.min(row[0]);
        x1 = x1.max(row[0]);
        y0 = y0.min(row[1]);
        y1 = y1.max(row[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let px = |v: f64| PAD + (v - x0) / span * (SIZE - 2.0 * PAD);
    let py = |v: f64| SIZE - PAD - (v - y0) / span * (SIZE - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for pass in [Origin::Noise, Origin::Vae, Origin::Real] {
        for (row, &o) in c.iter_rows().zip(origins) {
            if o == pass {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
                    px(row[0]),
                    py(row[1]),
                    color(o)
                );
            }
        }
    }
    for (i, o) in [Origin::Real, Origin::Vae, Origin::Noise].into_iter().enumerate() {
        let y = 16.0 + 14.0 * i as f64;
        let _ = writeln!(out, r#"<circle cx="10" cy="{}" r="4" fill="{}"/>"#, y - 4.0, color(o));
        let _ = writeln!(out, r#"<text x="18" y="{y}" font-size="11" font-family="sans-serif">{o}</text>"#);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
