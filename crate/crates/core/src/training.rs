use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{AdamState, Matrix};

/// Loss curve of one full-batch training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss evaluated at the start of each epoch, before its update.
    pub losses: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(f64::NAN)
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }
}

/// Runs `epochs` Adam steps. `loss_and_grad` is called with the current
/// parameters and the epoch index and returns the loss with its gradients.
pub(crate) fn adam_fit<F>(
    mut params: Vec<Matrix>,
    epochs: usize,
    lr: f64,
    seed: u64,
    mut loss_and_grad: F,
) -> Result<(Vec<Matrix>, TrainReport)>
where
    F: FnMut(&[Matrix], usize) -> Result<(f64, Vec<Matrix>)>,
{
    let mut adam = AdamState::new(&params, lr);
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grads) = loss_and_grad(&params, epoch)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("training loss at epoch {epoch}")));
        }
        losses.push(loss);
        adam.step(&mut params, &grads)?;
    }
    Ok((params, TrainReport { losses, epochs, seed }))
}
