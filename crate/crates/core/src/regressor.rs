//! Feed-forward regressor: input, two hidden layers, one output neuron.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{glorot_uniform, Activation, GradTape, Matrix, NodeId};
use crate::preprocess::Dataset;
use crate::seed;
use crate::training::{adam_fit, TrainReport};

/// Hidden widths below this trigger a warning.
pub const MIN_HIDDEN: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputHead {
    /// `ŷ = h2·W3 + b3`.
    #[default]
    Linear,
    /// `ŷ = σ(h2·W3 + b3)`, bounded by the activation's range.
    Activated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnConfig {
    pub hidden1: usize,
    pub hidden2: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub activation: Activation,
    pub head: OutputHead,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            hidden1: 64,
            hidden2: 64,
            epochs: 3000,
            lr: 1e-3,
            seed: 0,
            activation: Activation::Tanh,
            head: OutputHead::Linear,
        }
    }
}

impl DnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::Config("hidden widths must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("dnn epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("dnn lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnParams {
    pub activation: Activation,
    pub head: OutputHead,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

impl DnnParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, cfg: &DnnConfig, rng: &mut R) -> Self {
        let (h1, h2) = (cfg.hidden1, cfg.hidden2);
        DnnParams {
            activation: cfg.activation,
            head: cfg.head,
            w1: glorot_uniform(input_dim, h1, rng),
            b1: Matrix::zeros(1, h1),
            w2: glorot_uniform(h1, h2, rng),
            b2: Matrix::zeros(1, h2),
            w3: glorot_uniform(h2, 1, rng),
            b3: Matrix::zeros(1, 1),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    /// Parameters in order `w1, b1, w2, b2, w3, b3`.
    pub fn tensors(&self) -> Vec<Matrix> {
        vec![
            self.w1.clone(),
            self.b1.clone(),
            self.w2.clone(),
            self.b2.clone(),
            self.w3.clone(),
            self.b3.clone(),
        ]
    }

    pub fn from_tensors(tensors: Vec<Matrix>, activation: Activation, head: OutputHead) -> Result<Self> {
        let [w1, b1, w2, b2, w3, b3]: [Matrix; 6] = tensors
            .try_into()
            .map_err(|t: Vec<Matrix>| Error::Config(format!("expected 6 tensors, got {}", t.len())))?;
        let p = DnnParams {
            activation,
            head,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, h1, h2) = (self.w1.rows(), self.w1.cols(), self.w2.cols());
        let expected = [(m, h1), (1, h1), (h1, h2), (1, h2), (h2, 1), (1, 1)];
        for (t, want) in [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
            .into_iter()
            .zip(expected)
        {
            if t.shape() != want {
                return Err(Error::Shape {
                    op: "dnn params",
                    left: t.shape(),
                    right: want,
                });
            }
            t.check_finite("dnn params")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: DnnParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Predictions for each row of `x` as an `n x 1` matrix.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        let act = self.activation;
        let h1 = act.forward(&add_row(x.matmul(&self.w1)?, &self.b1));
        let h2 = act.forward(&add_row(h1.matmul(&self.w2)?, &self.b2));
        let out = add_row(h2.matmul(&self.w3)?, &self.b3);
        Ok(match self.head {
            OutputHead::Linear => out,
            OutputHead::Activated => act.forward(&out),
        })
    }
}

fn add_row(mut m: Matrix, row: &Matrix) -> Matrix {
    for r in 0..m.rows() {
        for (v, b) in m.row_mut(r).iter_mut().zip(row.as_slice()) {
            *v += b;
        }
    }
    m
}

/// Prediction for one standardized feature vector.
pub fn dnn_forward(x: &[f64], params: &DnnParams) -> Result<f64> {
    Ok(params.forward_batch(&Matrix::row_vector(x)?)?.get(0, 0))
}

/// Row-wise predictions; an empty dataset gives an empty vector.
pub fn predict(test: &Dataset, params: &DnnParams) -> Result<Vec<f64>> {
    if test.is_empty() {
        return Ok(Vec::new());
    }
    if test.dims() != params.input_dim() {
        return Err(Error::Shape {
            op: "predict",
            left: test.features().shape(),
            right: params.w1.shape(),
        });
    }
    Ok(params.forward_batch(test.features())?.into_vec())
}

fn record_mse(
    tape: &mut GradTape,
    tensors: &[Matrix],
    activation: Activation,
    head: OutputHead,
    x: &Matrix,
    y: &Matrix,
) -> Result<NodeId> {
    let t: Vec<NodeId> = tensors.iter().map(|m| tape.param(m.clone())).collect();
    let xs = tape.constant(x.clone());
    let ys = tape.constant(y.clone());

    let a1 = tape.matmul(xs, t[0])?;
    let a1 = tape.add_row(a1, t[1])?;
    let h1 = tape.activation(a1, activation);
    let a2 = tape.matmul(h1, t[2])?;
    let a2 = tape.add_row(a2, t[3])?;
    let h2 = tape.activation(a2, activation);
    let a3 = tape.matmul(h2, t[4])?;
    let mut out = tape.add_row(a3, t[5])?;
    if head == OutputHead::Activated {
        out = tape.activation(out, activation);
    }
    let diff = tape.sub(out, ys)?;
    let sq = tape.mul(diff, diff)?;
    tape.mean(sq)
}

/// Mean squared error for explicit tensors `w1, b1, w2, b2, w3, b3`.
pub fn mse(tensors: &[Matrix], activation: Activation, head: OutputHead, x: &Matrix, y: &[f64]) -> Result<f64> {
    let ym = Matrix::from_vec(y.len(), 1, y.to_vec())?;
    let mut tape = GradTape::new();
    let loss = record_mse(&mut tape, tensors, activation, head, x, &ym)?;
    Ok(tape.value(loss).get(0, 0))
}

pub fn mse_and_gradients(
    tensors: &[Matrix],
    activation: Activation,
    head: OutputHead,
    x: &Matrix,
    y: &[f64],
) -> Result<(f64, Vec<Matrix>)> {
    let ym = Matrix::from_vec(y.len(), 1, y.to_vec())?;
    let mut tape = GradTape::new();
    let loss = record_mse(&mut tape, tensors, activation, head, x, &ym)?;
    Ok((tape.value(loss).get(0, 0), tape.backward(loss)?))
}

/// Full-batch Adam on mean squared error. Deterministic given `cfg.seed`.
pub fn dnn_train(pool: &Dataset, cfg: &DnnConfig) -> Result<(DnnParams, TrainReport)> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.hidden1 < MIN_HIDDEN || cfg.hidden2 < MIN_HIDDEN {
        log::warn!(
            "hidden widths {}x{} are below the recommended {MIN_HIDDEN}",
            cfg.hidden1,
            cfg.hidden2
        );
    }
    let mut rng = seed::stage_rng(cfg.seed, "dnn-init");
    let init = DnnParams::init(pool.dims(), cfg, &mut rng);
    let ym = Matrix::from_vec(pool.len(), 1, pool.labels().to_vec())?;
    let x = pool.features();
    let (tensors, report) = adam_fit(init.tensors(), cfg.epochs, cfg.lr, cfg.seed, |t, _| {
        let mut tape = GradTape::new();
        let loss = record_mse(&mut tape, t, cfg.activation, cfg.head, x, &ym)?;
        Ok((tape.value(loss).get(0, 0), tape.backward(loss)?))
    })?;
    Ok((DnnParams::from_tensors(tensors, cfg.activation, cfg.head)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff, gradient_mismatch, standard_normal, DEFAULT_STEP};
    use crate::preprocess::Origin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(x: Matrix, y: Vec<f64>) -> Dataset {
        let n = y.len();
        Dataset::new(x, y, vec![Origin::Real; n]).unwrap()
    }

    #[test]
    fn zero_weights_predict_the_output_bias() {
        let cfg = DnnConfig { hidden1: 3, hidden2: 2, ..DnnConfig::default() };
        let mut p = DnnParams::init(2, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        p.w1 = Matrix::zeros(2, 3);
        p.w2 = Matrix::zeros(3, 2);
        p.w3 = Matrix::zeros(2, 1);
        p.b3 = Matrix::filled(1, 1, 0.42);
        assert_eq!(dnn_forward(&[3.0, -1.0], &p).unwrap(), 0.42);
    }

    #[test]
    fn forward_matches_hand_arithmetic() {
        let m = |v: f64| Matrix::filled(1, 1, v);
        let p = DnnParams::from_tensors(
            vec![m(2.0), m(-0.5), m(1.5), m(0.25), m(-3.0), m(0.1)],
            Activation::Tanh,
            OutputHead::Linear,
        )
        .unwrap();
        let h1 = (2.0f64 * 0.7 - 0.5).tanh();
        let h2 = (h1 * 1.5 + 0.25).tanh();
        assert_eq!(dnn_forward(&[0.7], &p).unwrap(), h2 * -3.0 + 0.1);

        let q = DnnParams { head: OutputHead::Activated, ..p.clone() };
        assert_eq!(dnn_forward(&[0.7], &q).unwrap(), (h2 * -3.0 + 0.1).tanh());
    }

    #[test]
    fn predict_edge_cases() {
        let cfg = DnnConfig { hidden1: 4, hidden2: 4, ..DnnConfig::default() };
        let p = DnnParams::init(2, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(predict(&Dataset::empty(2), &p).unwrap().is_empty());
        let one = dataset(Matrix::row_vector(&[0.3, -0.2]).unwrap(), vec![0.0]);
        assert_eq!(predict(&one, &p).unwrap(), vec![dnn_forward(&[0.3, -0.2], &p).unwrap()]);
        let wrong = dataset(Matrix::row_vector(&[0.3]).unwrap(), vec![0.0]);
        assert!(predict(&wrong, &p).is_err());
    }

    #[test]
    fn mse_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for head in [OutputHead::Linear, OutputHead::Activated] {
            for act in [Activation::Tanh, Activation::Sigmoid] {
                let cfg = DnnConfig { hidden1: 5, hidden2: 4, activation: act, head, ..DnnConfig::default() };
                let mut p = DnnParams::init(3, &cfg, &mut rng);
                p.b1 = standard_normal(1, 5, &mut rng);
                p.b3 = standard_normal(1, 1, &mut rng);
                let x = standard_normal(7, 3, &mut rng);
                let y = standard_normal(1, 7, &mut rng).into_vec();
                let t = p.tensors();
                let (_, g) = mse_and_gradients(&t, act, head, &x, &y).unwrap();
                let fd = finite_diff(|ts| mse(ts, act, head, &x, &y), &t, DEFAULT_STEP).unwrap();
                assert!(gradient_mismatch(&g, &fd, 1e-4, 1e-7) <= 1.0);
            }
        }
    }

    #[test]
    fn training_reduces_loss_and_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = standard_normal(40, 3, &mut rng);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] - 0.5 * r[1] + r[2] * r[2]).collect();
        let ds = dataset(x, y);
        let cfg = DnnConfig { hidden1: 16, hidden2: 16, epochs: 400, seed: 4, ..DnnConfig::default() };
        let (p1, r1) = dnn_train(&ds, &cfg).unwrap();
        let (p2, _) = dnn_train(&ds, &cfg).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1.losses.len(), 400);
        assert!(r1.final_loss() < r1.initial_loss());
    }

    #[test]
    fn constant_labels_are_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = standard_normal(30, 2, &mut rng);
        let ds = dataset(x, vec![0.8; 30]);
        let cfg = DnnConfig { hidden1: 8, hidden2: 8, epochs: 1500, lr: 1e-2, ..DnnConfig::default() };
        let (p, _) = dnn_train(&ds, &cfg).unwrap();
        for pred in predict(&ds, &p).unwrap() {
            assert!((pred - 0.8).abs() < 1e-2, "{pred}");
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let cfg = DnnConfig { hidden1: 3, hidden2: 2, ..DnnConfig::default() };
        let p = DnnParams::init(4, &cfg, &mut ChaCha8Rng::seed_from_u64(6));
        assert_eq!(DnnParams::from_json(&p.to_json().unwrap()).unwrap(), p);
    }

    #[test]
    fn config_validation() {
        assert!(DnnConfig { epochs: 0, ..DnnConfig::default() }.validate().is_err());
        assert!(DnnConfig { lr: -1.0, ..DnnConfig::default() }.validate().is_err());
        assert!(DnnConfig::default().validate().is_ok());
    }
}
