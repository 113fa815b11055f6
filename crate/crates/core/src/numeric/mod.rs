//! Dense matrices, activations, reverse-mode gradients and Adam.

mod activation;
mod adam;
mod gradcheck;
mod matrix;
mod tape;

pub use activation::Activation;
pub use adam::AdamState;
pub use gradcheck::{finite_diff, gradient_mismatch, DEFAULT_STEP};
pub use matrix::Matrix;
pub use tape::{GradTape, NodeId};

use rand::Rng;
use rand_distr::StandardNormal;

/// Glorot-uniform initialization: entries drawn from `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
    Matrix::from_parts(rows, cols, data)
}

/// Matrix of i.i.d. standard normal draws, filled row by row.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_parts(rows, cols, data)
}
