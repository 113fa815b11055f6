use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use tabvae::augment::{NoiseLabels, DEFAULT_NEIGHBORS};
use tabvae::eval::{ExperimentConfig, Method};
use tabvae::regressor::{DnnConfig, OutputHead};
use tabvae::vae::{LatentMode, VaeConfig};

/// Everything one invocation needs. Loaded from JSON, then patched by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub scales: Vec<usize>,
    pub repeats: usize,
    pub neighbors: usize,
    pub vae: VaeConfig,
    pub dnn: DnnConfig,
    pub methods: Vec<Method>,
    /// Forces `vae.latent = deterministic`.
    pub deterministic_latent: bool,
    /// Forces `dnn.head = activated`.
    pub activated_head: bool,
    pub noise_labels: NoiseLabels,
    pub snap_onehot: bool,
    pub resplit_per_repeat: bool,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            input: None,
            schema: None,
            out_dir: None,
            seed: e.seed,
            scales: e.scales,
            repeats: e.repeats,
            neighbors: DEFAULT_NEIGHBORS,
            vae: VaeConfig::default(),
            dnn: DnnConfig::default(),
            methods: e.methods,
            deterministic_latent: false,
            activated_head: false,
            noise_labels: NoiseLabels::Gaussian,
            snap_onehot: false,
            resplit_per_repeat: false,
            jobs: e.jobs,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let mut vae = self.vae.clone();
        if self.deterministic_latent {
            vae.latent = LatentMode::Deterministic;
        }
        let mut dnn = self.dnn.clone();
        if self.activated_head {
            dnn.head = OutputHead::Activated;
        }
        ExperimentConfig {
            seed: self.seed,
            scales: self.scales.clone(),
            repeats: self.repeats,
            neighbors: self.neighbors,
            vae,
            dnn,
            methods: self.methods.clone(),
            noise_labels: self.noise_labels,
            snap_onehot: self.snap_onehot,
            resplit_per_repeat: self.resplit_per_repeat,
            jobs: self.jobs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut cfg = RunConfig {
            input: Some("data.csv".into()),
            seed: 17,
            scales: vec![1, 3, 5],
            deterministic_latent: true,
            noise_labels: NoiseLabels::Knn,
            ..RunConfig::default()
        };
        cfg.vae.lr = 0.1 + 0.2;
        let text = cfg.to_json().unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 4, "dnn": {"epochs": 10}}"#).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.dnn.epochs, 10);
        assert_eq!(cfg.dnn.hidden1, 64);
        assert_eq!(cfg.repeats, 5);
        assert_eq!(cfg.experiment().run_count(), 105);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 4}"#).is_err());
    }

    #[test]
    fn flags_override_nested_settings() {
        let cfg = RunConfig {
            deterministic_latent: true,
            activated_head: true,
            ..RunConfig::default()
        };
        let e = cfg.experiment();
        assert_eq!(e.vae.latent, LatentMode::Deterministic);
        assert_eq!(e.dnn.head, OutputHead::Activated);
    }
}
