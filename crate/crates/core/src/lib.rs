//! VAE-based self-augmentation for small tabular regression datasets.
//!
//! The pipeline: clean and standardize a table ([`preprocess`]), train a
//! variational autoencoder on the training rows ([`vae`]), sample
//! artificial features and label them by inverse-distance nearest
//! neighbours ([`augment`]), train a feed-forward regressor on the
//! combined pool ([`regressor`]) and score it on held-out real rows
//! against a Gaussian-noise control ([`eval`]).

pub mod augment;
pub mod error;
pub mod eval;
pub mod numeric;
pub mod preprocess;
pub mod regressor;
pub mod seed;
pub mod synth;
mod training;
pub mod vae;

pub use training::TrainReport;

pub use error::{Error, Result};
