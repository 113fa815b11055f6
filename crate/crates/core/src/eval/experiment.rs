//! The repeated train/augment/evaluate protocol.
//!
//! Per master seed: one split (or one per repeat), then for each repeat a
//! VAE trained on the training rows, one regressor on the real rows alone
//! and one per `(method, scale)` on the augmented pool. Every regressor is
//! scored on the real test rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mae, pearson_r};
use super::pca::{pca_project2d, Projection};
use super::table::{Method, MetricsTable, RunResult};
use crate::augment::{self, AugmentedPool, NoiseLabels, VaeAugmentOptions, DEFAULT_NEIGHBORS};
use crate::error::{Error, Result};
use crate::preprocess::{prepare, Origin, Prepared, RawTable};
use crate::regressor::{self, DnnConfig};
use crate::seed;
use crate::vae::{self, VaeConfig, VaeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scales: Vec<usize>,
    pub repeats: usize,
    /// Neighbour count for artificial labels.
    pub neighbors: usize,
    /// `seed` fields inside are ignored; each run derives its own.
    pub vae: VaeConfig,
    pub dnn: DnnConfig,
    /// Augmentation methods; the pure baseline always runs.
    pub methods: Vec<Method>,
    pub noise_labels: NoiseLabels,
    pub snap_onehot: bool,
    pub resplit_per_repeat: bool,
    /// Worker threads; 0 lets the pool pick.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            scales: (1..=10).collect(),
            repeats: 5,
            neighbors: DEFAULT_NEIGHBORS,
            vae: VaeConfig::default(),
            dnn: DnnConfig::default(),
            methods: vec![Method::Vae, Method::Noise],
            noise_labels: NoiseLabels::Gaussian,
            snap_onehot: false,
            resplit_per_repeat: false,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.neighbors == 0 {
            return Err(Error::Config("neighbors must be at least 1".into()));
        }
        if self.scales.contains(&0) {
            return Err(Error::Config("scales must be positive".into()));
        }
        let mut scales = self.scales.clone();
        scales.sort_unstable();
        scales.dedup();
        if scales.len() != self.scales.len() {
            return Err(Error::Config("scales must not repeat".into()));
        }
        if self.methods.contains(&Method::Pure) {
            return Err(Error::Config("the pure baseline always runs; list only vae and noise".into()));
        }
        let mut methods = self.methods.clone();
        methods.sort_unstable();
        methods.dedup();
        if methods.len() != self.methods.len() {
            return Err(Error::Config("methods must not repeat".into()));
        }
        if !self.methods.is_empty() && self.scales.is_empty() {
            return Err(Error::Config("augmentation methods need at least one scale".into()));
        }
        self.vae.validate()?;
        self.dnn.validate()
    }

    /// Number of runs the protocol produces.
    pub fn run_count(&self) -> usize {
        (self.methods.len() * self.scales.len() + 1) * self.repeats
    }
}

/// Seed of repeat `j` under the master seed.
pub fn repeat_seed(master: u64, repeat: usize) -> u64 {
    seed::derive_indexed(master, "repeat", repeat as u64)
}

/// Seed of one regressor run inside a repeat.
pub fn run_seed(repeat_seed: u64, method: Method, scale: usize) -> u64 {
    match method {
        Method::Pure => seed::derive(repeat_seed, "pure"),
        m => seed::derive(repeat_seed, &format!("{m}-{scale}")),
    }
}

/// Seed of the VAE trained in a repeat.
pub fn vae_seed(repeat_seed: u64) -> u64 {
    seed::derive(repeat_seed, "vae")
}

/// Split seed of a repeat: shared by all repeats unless resplitting.
pub fn split_seed(cfg: &ExperimentConfig, repeat_seed: u64) -> u64 {
    if cfg.resplit_per_repeat {
        seed::derive(repeat_seed, "split")
    } else {
        seed::derive(cfg.seed, "split")
    }
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: MetricsTable,
    /// Repeat 0 at the largest scale: real training rows with the VAE and
    /// noise rows, projected to two dimensions.
    pub projection: Option<ProjectedPool>,
}

#[derive(Debug, Clone)]
pub struct ProjectedPool {
    pub projection: Projection,
    pub origins: Vec<Origin>,
}

impl ProjectedPool {
    /// `x,y,origin`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        super::write_projection_csv(writer, &self.projection, &self.origins)
    }
}

struct RepeatState {
    index: usize,
    seed: u64,
    data: Prepared,
    vae: std::result::Result<VaeParams, String>,
}

fn prepare_repeat(raw: &RawTable, cfg: &ExperimentConfig, index: usize) -> Result<RepeatState> {
    let seed = repeat_seed(cfg.seed, index);
    let data = prepare(raw, split_seed(cfg, seed))?;
    if !data.test.all_real() {
        return Err(Error::Schema("test set contains artificial rows".into()));
    }
    let vae = if cfg.methods.contains(&Method::Vae) {
        let vae_cfg = VaeConfig {
            seed: vae_seed(seed),
            ..cfg.vae.clone()
        };
        vae::train(data.train.features(), &vae_cfg)
            .map(|(p, report)| {
                log::debug!("repeat {index}: vae loss {:?} -> {:?}", report.initial_loss(), report.final_loss());
                p
            })
            .map_err(|e| format!("vae training: {e}"))
    } else {
        Err("vae not requested".into())
    };
    Ok(RepeatState { index, seed, data, vae })
}

/// Builds the artificial pool of one run. Deterministic in `run_seed`.
pub fn build_pool(
    data: &Prepared,
    vae: Option<&VaeParams>,
    method: Method,
    scale: usize,
    run_seed: u64,
    cfg: &ExperimentConfig,
) -> Result<AugmentedPool> {
    let mut rng = seed::stage_rng(run_seed, "generate");
    match method {
        Method::Pure => Ok(AugmentedPool {
            real: data.train.clone(),
            artificial: crate::preprocess::Dataset::empty(data.train.dims()),
            scale: 0,
        }),
        Method::Vae => {
            let params = vae.ok_or_else(|| Error::Config("vae run without a trained vae".into()))?;
            let options = VaeAugmentOptions {
                snap_onehot: cfg.snap_onehot.then_some(&data.codec),
            };
            augment::augment_vae(&data.train, params, scale, cfg.neighbors, options, &mut rng)
        }
        Method::Noise => augment::augment_noise(&data.train, scale, cfg.noise_labels, cfg.neighbors, &mut rng),
    }
}

fn score(state: &RepeatState, method: Method, scale: usize, cfg: &ExperimentConfig) -> Result<(f64, Option<f64>)> {
    let rs = run_seed(state.seed, method, scale);
    let vae = match (&state.vae, method) {
        (Err(e), Method::Vae) => return Err(Error::Numeric(e.clone())),
        (v, _) => v.as_ref().ok(),
    };
    let pool = build_pool(&state.data, vae, method, scale, rs, cfg)?;
    let train = augment::combine(&pool, &mut seed::stage_rng(rs, "shuffle"))?;
    let dnn_cfg = DnnConfig {
        seed: seed::derive(rs, "dnn"),
        ..cfg.dnn.clone()
    };
    let (params, _) = regressor::dnn_train(&train, &dnn_cfg)?;
    let test = &state.data.test;
    let pred = regressor::predict(test, &params)?;
    Ok((mae(&pred, test.labels())?, pearson_r(&pred, test.labels())?))
}

fn run_one(state: &RepeatState, method: Method, scale: usize, cfg: &ExperimentConfig) -> RunResult {
    let seed = run_seed(state.seed, method, scale);
    let (mae, pearson_r, failure) = match score(state, method, scale, cfg) {
        Ok((m, r)) => (m, r, None),
        Err(e) => {
            log::warn!("{method} scale {scale} repeat {} failed: {e}", state.index);
            (f64::NAN, None, Some(e.to_string()))
        }
    };
    RunResult {
        method,
        scale,
        repeat: state.index,
        seed,
        mae,
        pearson_r,
        failure,
    }
}

fn projection_of(state: &RepeatState, cfg: &ExperimentConfig) -> Result<Option<ProjectedPool>> {
    let Some(&scale) = cfg.scales.iter().max() else {
        return Ok(None);
    };
    let mut all = state.data.train.clone();
    for &method in &cfg.methods {
        let vae = match (&state.vae, method) {
            (Err(_), Method::Vae) => continue,
            (v, _) => v.as_ref().ok(),
        };
        let pool = build_pool(&state.data, vae, method, scale, run_seed(state.seed, method, scale), cfg)?;
        all = all.concat(&pool.artificial)?;
    }
    let projection = pca_project2d(all.features())?;
    Ok(Some(ProjectedPool {
        projection,
        origins: all.origins().to_vec(),
    }))
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the full protocol. Individual run failures are recorded in the
/// table; errors in cleaning or splitting abort.
pub fn run_experiment(raw: &RawTable, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    with_pool(cfg.jobs, || {
        let states = (0..cfg.repeats)
            .into_par_iter()
            .map(|j| prepare_repeat(raw, cfg, j))
            .collect::<Result<Vec<_>>>()?;

        let mut tasks: Vec<(usize, Method, usize)> = Vec::with_capacity(cfg.run_count());
        for j in 0..cfg.repeats {
            tasks.push((j, Method::Pure, 0));
            for &m in &cfg.methods {
                tasks.extend(cfg.scales.iter().map(|&k| (j, m, k)));
            }
        }
        let runs: Vec<RunResult> = tasks
            .into_par_iter()
            .map(|(j, m, k)| run_one(&states[j], m, k, cfg))
            .collect();

        let projection = match projection_of(&states[0], cfg) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("projection skipped: {e}");
                None
            }
        };
        Ok(ExperimentOutput {
            table: MetricsTable::new(runs),
            projection,
        })
    })?
}
