//! `tabvae` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabvae::augment::NoiseLabels;
use tabvae::eval::Method;
use tabvae::synth::LabelFn;

use crate::commands::MissingFile;
use crate::config::RunConfig;

pub const OUT_DIR_ENV: &str = "TABVAE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "tabvae-out";

#[derive(Parser, Debug)]
#[command(name = "tabvae", version, about = "VAE self-augmentation for small tabular datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic CSV and its schema.
    Synth(SynthArgs),
    /// Run the repeated augment/train/evaluate protocol.
    Experiment(RunArgs),
    /// Train a VAE once and write the real + generated pool.
    Augment {
        #[command(flatten)]
        run: RunArgs,
        /// Generated rows as a multiple of the training rows.
        #[arg(long, default_value_t = 1)]
        scale: usize,
        /// Pool CSV path; defaults to `<out-dir>/pool.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project a pool CSV to two dimensions (CSV and SVG).
    Project {
        /// CSV with `origin`, feature columns and `label`.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON spec; the flags below are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    numeric: usize,
    /// `name:arity`, repeatable. Defaults to `gas:3` and `metal:4`.
    #[arg(long = "categorical", value_parser = parse_categorical)]
    categoricals: Vec<(String, usize)>,
    #[arg(long, default_value = "linear")]
    label: LabelFn,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path; defaults to `<out-dir>/synthetic.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Schema path; defaults to the CSV path with `.schema.json`.
    #[arg(long)]
    schema_out: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated augmentation scales.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Neighbours used to label generated rows.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Comma-separated augmentation methods (vae, noise).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    vae_epochs: Option<usize>,
    #[arg(long)]
    vae_lr: Option<f64>,
    #[arg(long)]
    dnn_epochs: Option<usize>,
    #[arg(long)]
    dnn_lr: Option<f64>,
    /// Latent code `z = mean + variance` without sampling noise.
    #[arg(long)]
    deterministic_latent: bool,
    /// Apply the hidden activation to the regressor output as well.
    #[arg(long)]
    activated_head: bool,
    /// Labels for noise rows: gaussian or knn.
    #[arg(long, value_parser = parse_noise_labels)]
    noise_labels: Option<NoiseLabels>,
    /// Round generated one-hot blocks to their largest entry.
    #[arg(long)]
    snap_onehot: bool,
    /// Draw a new train/test split in every repeat.
    #[arg(long)]
    resplit_per_repeat: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_categorical(s: &str) -> Result<(String, usize), String> {
    let (name, arity) = s.split_once(':').ok_or_else(|| format!("expected name:arity, got {s:?}"))?;
    let arity = arity.parse().map_err(|_| format!("bad arity in {s:?}"))?;
    Ok((name.to_string(), arity))
}

fn parse_noise_labels(s: &str) -> Result<NoiseLabels, String> {
    match s {
        "gaussian" => Ok(NoiseLabels::Gaussian),
        "knn" => Ok(NoiseLabels::Knn),
        other => Err(format!("expected gaussian or knn, got {other:?}")),
    }
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                commands::require_file(path)?;
                RunConfig::load(path)?
            }
            None => RunConfig::default(),
        };
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(p) = &self.schema {
            cfg.schema = Some(p.clone());
        }
        if let Some(p) = &self.out_dir {
            cfg.out_dir = Some(p.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.scales {
            cfg.scales = v.clone();
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.neighbors {
            cfg.neighbors = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = self.vae_epochs {
            cfg.vae.epochs = v;
        }
        if let Some(v) = self.vae_lr {
            cfg.vae.lr = v;
        }
        if let Some(v) = self.dnn_epochs {
            cfg.dnn.epochs = v;
        }
        if let Some(v) = self.dnn_lr {
            cfg.dnn.lr = v;
        }
        if let Some(v) = self.noise_labels {
            cfg.noise_labels = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        cfg.deterministic_latent |= self.deterministic_latent;
        cfg.activated_head |= self.activated_head;
        cfg.snap_onehot |= self.snap_onehot;
        cfg.resplit_per_repeat |= self.resplit_per_repeat;
        Ok(cfg)
    }
}

/// Flag, then config file, then environment, then the built-in default.
fn out_dir(flag: Option<&PathBuf>) -> PathBuf {
    flag.cloned()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let spec = match &args.spec {
                Some(path) => {
                    commands::require_file(path)?;
                    serde_json::from_str(&std::fs::read_to_string(path)?)?
                }
                None => commands::synth_spec_from_flags(
                    args.rows,
                    args.numeric,
                    &args.categoricals,
                    args.label,
                    args.noise_std,
                    args.seed,
                ),
            };
            let csv = args.out.unwrap_or_else(|| out_dir(args.out_dir.as_ref()).join("synthetic.csv"));
            let schema = args.schema_out.unwrap_or_else(|| csv.with_extension("schema.json"));
            commands::cmd_synth(&spec, &csv, &schema)
        }
        Command::Experiment(args) => {
            let cfg = args.resolve()?;
            let dir = out_dir(cfg.out_dir.as_ref());
            commands::cmd_experiment(&cfg, &dir)
        }
        Command::Augment { run, scale, out } => {
            let cfg = run.resolve()?;
            let out = out.unwrap_or_else(|| out_dir(cfg.out_dir.as_ref()).join("pool.csv"));
            commands::cmd_augment(&cfg, scale, &out)
        }
        Command::Project { pool, out_dir: dir } => commands::cmd_project(&pool, &out_dir(dir.as_ref())),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingFile>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
