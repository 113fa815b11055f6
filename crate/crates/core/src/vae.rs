//! Variational autoencoder used as the artificial feature generator.
//!
//! ```text
//! x ─ w1 ─ σ ─┬─ w2 → μ̃        z = μ̃ + exp(½ log Σ̃) ∘ ε,  ε ~ N(0, I)
//!             └─ w3 → log Σ̃
//! z ─ w4 ─ σ ─┬─ w5 → x̃        (reconstruction mean)
//!             └─ w6 → log Σ    (decoder variance head)
//! ```
//!
//! The network layers carry no biases. Training minimizes the negative
//! ELBO averaged over rows: squared reconstruction error plus the closed
//! form KL divergence of `N(μ̃, Σ̃)` from the standard normal prior.
//! New feature rows are produced by decoding `z ~ N(0, I)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{glorot_uniform, standard_normal, Activation, GradTape, Matrix, NodeId};
use crate::seed;
use crate::training::{adam_fit, TrainReport};

/// Which Gaussian statistics the regularizer penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// KL of the encoder posterior `N(μ̃, Σ̃)` from `N(0, I)`.
    #[default]
    EncoderKl,
    /// The same closed form applied to the decoder heads `(x̃, exp(w6 head))`
    /// in place of the encoder statistics.
    DecoderHeads,
}

/// How the latent code is formed from the encoder outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentMode {
    /// `z = μ̃ + sqrt(Σ̃) ∘ ε`.
    #[default]
    Sampled,
    /// `z = μ̃ + Σ̃`, no noise.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeConfig {
    /// Latent width; `None` picks `max(2, ceil(M / 4))`.
    pub latent_dim: Option<usize>,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub activation: Activation,
    pub regularizer: Regularizer,
    pub latent: LatentMode,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            latent_dim: None,
            hidden: 64,
            epochs: 2000,
            lr: 1e-3,
            seed: 0,
            activation: Activation::Tanh,
            regularizer: Regularizer::EncoderKl,
            latent: LatentMode::Sampled,
        }
    }
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == Some(0) {
            return Err(Error::Config("latent_dim must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("vae hidden width must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("vae epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("vae lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }

    pub fn latent_for(&self, input_dim: usize) -> usize {
        self.latent_dim.unwrap_or_else(|| input_dim.div_ceil(4).max(2))
    }
}

/// The six weight matrices plus the architecture they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeParams {
    pub activation: Activation,
    pub input_dim: usize,
    pub hidden: usize,
    pub latent_dim: usize,
    /// `M x h` encoder input layer.
    pub w1: Matrix,
    /// `h x L` encoder mean head.
    pub w2: Matrix,
    /// `h x L` encoder log-variance head.
    pub w3: Matrix,
    /// `L x h` decoder input layer.
    pub w4: Matrix,
    /// `h x M` decoder mean head.
    pub w5: Matrix,
    /// `h x M` decoder log-variance head.
    pub w6: Matrix,
}

impl VaeParams {
    /// Glorot-uniform weights drawn from `rng`.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        latent_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let (m, h, l) = (input_dim, hidden, latent_dim);
        VaeParams {
            activation,
            input_dim,
            hidden,
            latent_dim,
            w1: glorot_uniform(m, h, rng),
            w2: glorot_uniform(h, l, rng),
            w3: glorot_uniform(h, l, rng),
            w4: glorot_uniform(l, h, rng),
            w5: glorot_uniform(h, m, rng),
            w6: glorot_uniform(h, m, rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize, latent_dim: usize, activation: Activation) -> Self {
        let (m, h, l) = (input_dim, hidden, latent_dim);
        VaeParams {
            activation,
            input_dim,
            hidden,
            latent_dim,
            w1: Matrix::zeros(m, h),
            w2: Matrix::zeros(h, l),
            w3: Matrix::zeros(h, l),
            w4: Matrix::zeros(l, h),
            w5: Matrix::zeros(h, m),
            w6: Matrix::zeros(h, m),
        }
    }

    /// Weights in order `w1..w6`.
    pub fn weights(&self) -> Vec<Matrix> {
        vec![
            self.w1.clone(),
            self.w2.clone(),
            self.w3.clone(),
            self.w4.clone(),
            self.w5.clone(),
            self.w6.clone(),
        ]
    }

    /// Rebuilds parameters from `w1..w6`, inferring and checking shapes.
    pub fn from_weights(weights: Vec<Matrix>, activation: Activation) -> Result<Self> {
        let [w1, w2, w3, w4, w5, w6]: [Matrix; 6] = weights
            .try_into()
            .map_err(|w: Vec<Matrix>| Error::Config(format!("expected 6 weight matrices, got {}", w.len())))?;
        let p = VaeParams {
            activation,
            input_dim: w1.rows(),
            hidden: w1.cols(),
            latent_dim: w2.cols(),
            w1,
            w2,
            w3,
            w4,
            w5,
            w6,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, h, l) = (self.input_dim, self.hidden, self.latent_dim);
        let expected = [(m, h), (h, l), (h, l), (l, h), (h, m), (h, m)];
        for (w, want) in [&self.w1, &self.w2, &self.w3, &self.w4, &self.w5, &self.w6]
            .into_iter()
            .zip(expected)
        {
            if w.shape() != want {
                return Err(Error::Shape {
                    op: "vae params",
                    left: w.shape(),
                    right: want,
                });
            }
            w.check_finite("vae params")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: VaeParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Encoder mean and log-variance for each row of `x` (`n x M`).
    pub fn encode_batch(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let h = self.activation.forward(&x.matmul(&self.w1)?);
        Ok((h.matmul(&self.w2)?, h.matmul(&self.w3)?))
    }

    /// Encoder mean and log-variance for one feature vector.
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mu, logvar) = self.encode_batch(&Matrix::row_vector(x)?)?;
        Ok((mu.into_vec(), logvar.into_vec()))
    }

    /// Decoder mean and log-variance heads for each latent row.
    pub fn decode_batch(&self, z: &Matrix) -> Result<DecoderOutput> {
        let g = self.activation.forward(&z.matmul(&self.w4)?);
        Ok(DecoderOutput {
            mean: g.matmul(&self.w5)?,
            log_variance: g.matmul(&self.w6)?,
        })
    }

    /// Reconstruction mean for one latent vector.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decode_batch(&Matrix::row_vector(z)?)?.mean.into_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOutput {
    pub mean: Matrix,
    pub log_variance: Matrix,
}

/// `z = mu + exp(logvar / 2) ∘ ε` with fresh standard normal `ε`.
pub fn sample_latent<R: Rng + ?Sized>(mu: &[f64], logvar: &[f64], rng: &mut R) -> Vec<f64> {
    let eps = standard_normal(1, mu.len(), rng);
    reparameterize(mu, logvar, eps.as_slice())
}

pub fn reparameterize(mu: &[f64], logvar: &[f64], eps: &[f64]) -> Vec<f64> {
    mu.iter()
        .zip(logvar)
        .zip(eps)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect()
}

/// Closed-form `KL(N(mu, exp(logvar)) || N(0, 1))` for one coordinate.
pub fn kl_standard_normal(mu: f64, logvar: f64) -> f64 {
    0.5 * (logvar.exp() + mu * mu - 1.0 - logvar)
}

/// Loss options that shape the objective but carry no weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Objective {
    pub regularizer: Regularizer,
    pub latent: LatentMode,
}

impl From<&VaeConfig> for Objective {
    fn from(cfg: &VaeConfig) -> Self {
        Objective {
            regularizer: cfg.regularizer,
            latent: cfg.latent,
        }
    }
}

/// Records the negative ELBO on `tape`; `weights` are registered as
/// parameters in order `w1..w6`. `eps` is `n x L` and ignored in
/// deterministic mode.
fn record_loss(
    tape: &mut GradTape,
    weights: &[Matrix],
    activation: Activation,
    x: &Matrix,
    eps: &Matrix,
    objective: Objective,
) -> Result<NodeId> {
    let n = x.rows().max(1) as f64;
    let w: Vec<NodeId> = weights.iter().map(|m| tape.param(m.clone())).collect();
    let xs = tape.constant(x.clone());

    let pre = tape.matmul(xs, w[0])?;
    let h = tape.activation(pre, activation);
    let mu = tape.matmul(h, w[1])?;
    let logvar = tape.matmul(h, w[2])?;

    let z = match objective.latent {
        LatentMode::Sampled => {
            let half = tape.scale(logvar, 0.5)?;
            let std = tape.exp(half)?;
            let e = tape.constant(eps.clone());
            let noise = tape.mul(std, e)?;
            tape.add(mu, noise)?
        }
        LatentMode::Deterministic => {
            let var = tape.exp(logvar)?;
            tape.add(mu, var)?
        }
    };

    let pre_dec = tape.matmul(z, w[3])?;
    let g = tape.activation(pre_dec, activation);
    let recon = tape.matmul(g, w[4])?;

    let diff = tape.sub(xs, recon)?;
    let sq = tape.mul(diff, diff)?;
    let recon_err = tape.sum(sq);

    let (m, lv) = match objective.regularizer {
        Regularizer::EncoderKl => (mu, logvar),
        Regularizer::DecoderHeads => (recon, tape.matmul(g, w[5])?),
    };
    let penalty = gaussian_penalty(tape, m, lv)?;

    let total = tape.add(recon_err, penalty)?;
    tape.scale(total, 1.0 / n)
}

/// `½ Σ (exp(lv) + m² − 1 − lv)` over all elements.
fn gaussian_penalty(tape: &mut GradTape, m: NodeId, lv: NodeId) -> Result<NodeId> {
    let var = tape.exp(lv)?;
    let m2 = tape.mul(m, m)?;
    let a = tape.add(var, m2)?;
    let b = tape.sub(a, lv)?;
    let c = tape.add_scalar(b, -1.0)?;
    let s = tape.sum(c);
    tape.scale(s, 0.5)
}

/// Negative ELBO for explicit weights `w1..w6` and fixed noise `eps`.
pub fn loss_with_noise(
    weights: &[Matrix],
    activation: Activation,
    x: &Matrix,
    eps: &Matrix,
    objective: Objective,
) -> Result<f64> {
    let mut tape = GradTape::new();
    let loss = record_loss(&mut tape, weights, activation, x, eps, objective)?;
    Ok(tape.value(loss).get(0, 0))
}

/// Negative ELBO and its gradients with respect to `w1..w6`.
pub fn loss_and_gradients(
    weights: &[Matrix],
    activation: Activation,
    x: &Matrix,
    eps: &Matrix,
    objective: Objective,
) -> Result<(f64, Vec<Matrix>)> {
    let mut tape = GradTape::new();
    let loss = record_loss(&mut tape, weights, activation, x, eps, objective)?;
    let value = tape.value(loss).get(0, 0);
    Ok((value, tape.backward(loss)?))
}

/// Negative ELBO on `batch` with one fresh `ε` per row drawn from `rng`.
pub fn elbo_loss<R: Rng + ?Sized>(
    batch: &Matrix,
    params: &VaeParams,
    objective: Objective,
    rng: &mut R,
) -> Result<f64> {
    if batch.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let eps = standard_normal(batch.rows(), params.latent_dim, rng);
    loss_with_noise(&params.weights(), params.activation, batch, &eps, objective)
}

/// Full-batch Adam on the negative ELBO. Deterministic given `cfg.seed`.
pub fn train(features: &Matrix, cfg: &VaeConfig) -> Result<(VaeParams, TrainReport)> {
    cfg.validate()?;
    if features.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let latent = cfg.latent_for(features.cols());
    let mut init_rng = seed::stage_rng(cfg.seed, "vae-init");
    let mut eps_rng = seed::stage_rng(cfg.seed, "vae-eps");
    let init = VaeParams::init(features.cols(), cfg.hidden, latent, cfg.activation, &mut init_rng);
    let objective = Objective::from(cfg);

    let (weights, report) = adam_fit(init.weights(), cfg.epochs, cfg.lr, cfg.seed, |w, _| {
        let eps = standard_normal(features.rows(), latent, &mut eps_rng);
        loss_and_gradients(w, cfg.activation, features, &eps, objective)
    })?;
    Ok((VaeParams::from_weights(weights, cfg.activation)?, report))
}

/// Decodes `count` draws from the standard normal prior into feature rows.
pub fn generate<R: Rng + ?Sized>(params: &VaeParams, count: usize, rng: &mut R) -> Result<Matrix> {
    if count == 0 {
        return Err(Error::Config("generate needs count >= 1".into()));
    }
    let z = standard_normal(count, params.latent_dim, rng);
    Ok(params.decode_batch(&z)?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff, gradient_mismatch, DEFAULT_STEP};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hand_params() -> VaeParams {
        let m = |rows: &[Vec<f64>]| Matrix::from_rows(rows).unwrap();
        VaeParams::from_weights(
            vec![
                m(&[vec![0.5, -1.0], vec![0.25, 2.0]]),
                m(&[vec![1.0], vec![-2.0]]),
                m(&[vec![0.5], vec![0.5]]),
                m(&[vec![0.3, -0.7]]),
                m(&[vec![1.0, 0.0], vec![2.0, -1.0]]),
                m(&[vec![0.1, 0.2], vec![0.3, 0.4]]),
            ],
            Activation::Tanh,
        )
        .unwrap()
    }

    #[test]
    fn zero_network_encodes_to_standard_normal() {
        let p = VaeParams::zeros(3, 4, 2, Activation::Tanh);
        let (mu, lv) = p.encode(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(mu, vec![0.0, 0.0]);
        assert_eq!(lv, vec![0.0, 0.0]);
        assert_eq!(p.decode(&[0.3, 0.1]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn encode_matches_hand_arithmetic() {
        let p = hand_params();
        let (mu, lv) = p.encode(&[1.0, 2.0]).unwrap();
        // x·w1 = [1, 3]
        let (a, b) = (1.0f64.tanh(), 3.0f64.tanh());
        assert_eq!(mu, vec![a - 2.0 * b]);
        assert_eq!(lv, vec![0.5 * a + 0.5 * b]);
        assert_eq!(p.encode(&[1.0, 2.0]).unwrap(), (mu, lv));
    }

    #[test]
    fn decode_matches_hand_arithmetic() {
        let p = hand_params();
        let out = p.decode(&[2.0]).unwrap();
        let (a, b) = (0.6f64.tanh(), (-1.4f64).tanh());
        assert_eq!(out, vec![a + 2.0 * b, -b]);
        let heads = p.decode_batch(&Matrix::row_vector(&[2.0]).unwrap()).unwrap();
        assert_eq!(heads.log_variance.as_slice(), &[0.1 * a + 0.3 * b, 0.2 * a + 0.4 * b]);
    }

    #[test]
    fn sampling_edge_cases() {
        assert_eq!(reparameterize(&[1.5, -2.0], &[-800.0, -800.0], &[3.0, -1.0]), vec![1.5, -2.0]);
        assert_eq!(reparameterize(&[0.0, 0.0], &[0.0, 0.0], &[0.7, -1.3]), vec![0.7, -1.3]);
    }

    #[test]
    fn sample_mean_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mu, lv) = (0.8, (1.5f64).ln() * 2.0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_latent(&[mu], &[lv], &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - mu).abs() < 3.0 * 1.5 / (n as f64).sqrt());
    }

    #[test]
    fn kl_reference_values() {
        assert_eq!(kl_standard_normal(0.0, 0.0), 0.0);
        let expect = 0.5 * (std::f64::consts::E - 2.0);
        assert!((kl_standard_normal(0.0, 1.0) - expect).abs() < 1e-15);
        assert!((expect - 0.3591).abs() < 1e-4);
    }

    #[test]
    fn perfect_reconstruction_at_prior_has_zero_loss() {
        let p = VaeParams::zeros(2, 3, 2, Activation::Tanh);
        let x = Matrix::zeros(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(elbo_loss(&x, &p, Objective::default(), &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn loss_adds_kl_of_logvar_one() {
        // zero decoder so x̃ = 0 = x; encoder fixed at μ̃ = 0, log Σ̃ = 1
        let mut p = VaeParams::zeros(1, 1, 1, Activation::Sigmoid);
        p.w3 = Matrix::filled(1, 1, 2.0); // sigmoid(0) * 2 = 1
        let x = Matrix::zeros(3, 1);
        let eps = Matrix::zeros(3, 1);
        let loss = loss_with_noise(&p.weights(), p.activation, &x, &eps, Objective::default()).unwrap();
        assert!((loss - 0.5 * (std::f64::consts::E - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for regularizer in [Regularizer::EncoderKl, Regularizer::DecoderHeads] {
            for latent in [LatentMode::Sampled, LatentMode::Deterministic] {
                let objective = Objective { regularizer, latent };
                let p = VaeParams::init(4, 6, 2, Activation::Tanh, &mut rng);
                let x = standard_normal(5, 4, &mut rng);
                let eps = standard_normal(5, 2, &mut rng);
                let w = p.weights();
                let (_, g) = loss_and_gradients(&w, p.activation, &x, &eps, objective).unwrap();
                let fd = finite_diff(|ws| loss_with_noise(ws, p.activation, &x, &eps, objective), &w, DEFAULT_STEP)
                    .unwrap();
                assert!(gradient_mismatch(&g, &fd, 1e-4, 1e-7) <= 1.0, "{objective:?}");
            }
        }
    }

    #[test]
    fn config_rejects_zero_epochs() {
        let cfg = VaeConfig { epochs: 0, ..VaeConfig::default() };
        assert!(matches!(train(&Matrix::zeros(3, 2), &cfg), Err(Error::Config(_))));
        assert_eq!(VaeConfig::default().latent_for(11), 3);
        assert_eq!(VaeConfig::default().latent_for(3), 2);
    }

    #[test]
    fn training_reduces_loss_and_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = standard_normal(50, 4, &mut rng);
        let cfg = VaeConfig { epochs: 300, hidden: 16, seed: 9, ..VaeConfig::default() };
        let (p1, r1) = train(&x, &cfg).unwrap();
        let (p2, _) = train(&x, &cfg).unwrap();
        assert_eq!(p1, p2);
        assert!(r1.final_loss() < r1.initial_loss());
        assert_eq!(r1.losses.len(), 300);
    }

    #[test]
    fn generate_uses_decoder_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = VaeParams::init(3, 5, 2, Activation::Tanh, &mut rng);
        let mut q = p.clone();
        q.w1 = Matrix::filled(3, 5, 9.0);
        q.w3 = Matrix::filled(5, 2, -1.0);
        let a = generate(&p, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = generate(&q, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(generate(&p, 0, &mut rng).is_err());
        let zero = VaeParams::zeros(3, 5, 2, Activation::Tanh);
        assert_eq!(generate(&zero, 4, &mut rng).unwrap(), Matrix::zeros(4, 3));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = VaeParams::init(3, 4, 2, Activation::Relu, &mut rng);
        let back = VaeParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, back);
        let mut bad: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        bad["hidden"] = 7.into();
        assert!(VaeParams::from_json(&bad.to_string()).is_err());
    }
}
