use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use tabvae::eval::{self, run_experiment, Method};
use tabvae::preprocess::{prepare, Dataset, RawTable, Schema};
use tabvae::synth::{self, CategoricalSpec, LabelFn, SyntheticSpec};
use tabvae::vae::{self, VaeConfig};

use crate::config::RunConfig;

/// An input file that does not exist. Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("file not found: {}", .0.display())]
pub struct MissingFile(pub PathBuf);

pub fn require_file(path: &Path) -> Result<(), MissingFile> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MissingFile(path.to_path_buf()))
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_table(cfg: &RunConfig) -> anyhow::Result<RawTable> {
    let (Some(input), Some(schema)) = (&cfg.input, &cfg.schema) else {
        bail!("both an input CSV and a schema are required (--input, --schema or the config file)");
    };
    require_file(input)?;
    require_file(schema)?;
    let schema = Schema::from_path(schema)?;
    Ok(RawTable::from_csv_path(input, &schema)?)
}

pub fn synth_spec_from_flags(
    rows: usize,
    numeric: usize,
    categoricals: &[(String, usize)],
    label: LabelFn,
    noise_std: f64,
    seed: u64,
) -> SyntheticSpec {
    let mut spec = SyntheticSpec {
        rows,
        numeric,
        label,
        noise_std,
        ..SyntheticSpec::canonical(seed)
    };
    if !categoricals.is_empty() {
        spec.categoricals = categoricals
            .iter()
            .map(|(name, arity)| CategoricalSpec {
                name: name.clone(),
                arity: *arity,
            })
            .collect();
    }
    spec
}

pub fn cmd_synth(spec: &SyntheticSpec, csv: &Path, schema: &Path) -> anyhow::Result<()> {
    let table = synth::generate(spec)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write(csv, buf)?;
    write(schema, table.schema_json()?)?;
    println!("wrote {} rows to {} (schema {})", table.rows.len(), csv.display(), schema.display());
    Ok(())
}

pub fn cmd_experiment(cfg: &RunConfig, dir: &Path) -> anyhow::Result<()> {
    let raw = load_table(cfg)?;
    let exp = cfg.experiment();
    exp.validate()?;
    log::info!("running {} regressors", exp.run_count());
    let out = run_experiment(&raw, &exp)?;

    let mut runs = Vec::new();
    out.table.write_runs_csv(&mut runs)?;
    write(&dir.join("metrics.csv"), runs)?;
    let mut agg = Vec::new();
    out.table.write_aggregate_csv(&mut agg)?;
    write(&dir.join("aggregate.csv"), agg)?;
    let summary = out.table.summary();
    write(&dir.join("summary.txt"), &summary)?;
    write(&dir.join("config.json"), cfg.to_json()?)?;
    if let Some(p) = &out.projection {
        let mut csv = Vec::new();
        p.write_csv(&mut csv)?;
        write(&dir.join("projection.csv"), csv)?;
        write(&dir.join("projection.svg"), eval::projection_svg(&p.projection, &p.origins)?)?;
    }
    print!("{summary}");
    println!("outputs in {}", dir.display());
    if out.table.failures() == out.table.len() {
        bail!("every run failed");
    }
    Ok(())
}

/// Same split, VAE and generation streams as repeat 0 of an experiment
/// with this config.
pub fn cmd_augment(cfg: &RunConfig, scale: usize, out: &Path) -> anyhow::Result<()> {
    let raw = load_table(cfg)?;
    let exp = cfg.experiment();
    exp.validate()?;
    let repeat = eval::repeat_seed(exp.seed, 0);
    let data = prepare(&raw, eval::split_seed(&exp, repeat))?;
    let vae_cfg = VaeConfig {
        seed: eval::vae_seed(repeat),
        ..exp.vae.clone()
    };
    let (params, report) = vae::train(data.train.features(), &vae_cfg)?;
    log::info!("vae loss {:?} -> {:?}", report.initial_loss(), report.final_loss());
    let seed = eval::run_seed(repeat, Method::Vae, scale);
    let pool = eval::build_pool(&data, Some(&params), Method::Vae, scale, seed, &exp)?;
    let all = pool.real.concat(&pool.artificial)?;
    let mut buf = Vec::new();
    all.write_csv(&mut buf, &data.codec.feature_names())?;
    write(out, buf)?;
    println!(
        "wrote {} rows ({} real, {} vae) to {}",
        all.len(),
        pool.real.len(),
        pool.artificial.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_project(pool: &Path, dir: &Path) -> anyhow::Result<()> {
    require_file(pool)?;
    let file = fs::File::open(pool).with_context(|| format!("opening {}", pool.display()))?;
    let (data, _) = Dataset::read_csv(file).with_context(|| format!("reading {}", pool.display()))?;
    let proj = eval::pca_project2d(data.features())?;
    let mut csv = Vec::new();
    eval::write_projection_csv(&mut csv, &proj, data.origins())?;
    write(&dir.join("projection.csv"), csv)?;
    write(&dir.join("projection.svg"), eval::projection_svg(&proj, data.origins())?)?;
    let total: f64 = proj.eigenvalues.iter().sum();
    println!(
        "projected {} rows; two components explain {:.1}% of the variance",
        data.len(),
        100.0 * (proj.eigenvalues[0] + proj.eigenvalues[1]) / total
    );
    Ok(())
}
