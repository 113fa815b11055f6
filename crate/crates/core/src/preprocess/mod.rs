//! Cleaning, one-hot + z-score encoding, and the seeded train/test split.

mod codec;
mod dataset;
mod table;

pub use codec::{Codec, FeatureCodec, Standardizer};
pub use dataset::{split, split_indices, train_size, Dataset, Origin};
pub use table::{clean, ColumnKind, ColumnSpec, RawTable, Schema};

use crate::error::Result;

/// Fits a codec on the table and encodes it.
pub fn fit_codec(table: &RawTable) -> Result<Codec> {
    Codec::fit(table)
}

pub fn encode(table: &RawTable, codec: &Codec) -> Result<Dataset> {
    codec.encode(table)
}

pub fn decode_label(z: f64, codec: &Codec) -> f64 {
    codec.decode_label(z)
}

/// Standardized train and test sets from a raw table. The codec is fitted
/// on the training rows only.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub codec: Codec,
    pub train: Dataset,
    pub test: Dataset,
}

/// Clean, split with `seed`, fit on train, encode both sides.
pub fn prepare(raw: &RawTable, seed: u64) -> Result<Prepared> {
    let cleaned = clean(raw)?;
    let (train_idx, test_idx) = split_indices(cleaned.len(), seed)?;
    let train_raw = cleaned.select_rows(&train_idx);
    let test_raw = cleaned.select_rows(&test_idx);
    let codec = Codec::fit(&train_raw)?;
    let train = codec.encode(&train_raw)?;
    let test = codec.encode(&test_raw)?;
    Ok(Prepared { codec, train, test })
}
