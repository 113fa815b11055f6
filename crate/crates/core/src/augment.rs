//! Artificial label generation and augmented training pools.
//!
//! Generated feature rows get labels from their `S` nearest real rows,
//! weighted by inverse squared Euclidean distance:
//!
//! ```text
//! d(a, b) = Σ_k (a_k − b_k)²        ŷ = Σ_r y_r / d_r  /  Σ_r 1 / d_r
//! ```
//!
//! The Gaussian-noise control replaces both features and labels with
//! standard normal draws in the standardized space.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{standard_normal, Matrix};
use crate::preprocess::{Codec, Dataset, Origin};
use crate::vae::{self, VaeParams};

/// Distances below this count as an exact match.
pub const ZERO_DISTANCE: f64 = 1e-12;

pub const DEFAULT_NEIGHBORS: usize = 5;

/// Scales above this still run, with a warning.
pub const SOFT_MAX_SCALE: usize = 10;

/// Squared Euclidean distance, no square root.
pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op: "squared_distance",
            left: (1, a.len()),
            right: (1, b.len()),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The nearest real rows to one query, ascending by `(distance, index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub neighbors: Vec<Neighbor>,
}

impl NeighborSet {
    /// The `min(s, n)` nearest rows of `real` to `query`.
    pub fn find(query: &[f64], real: &Matrix, s: usize) -> Result<NeighborSet> {
        if query.len() != real.cols() {
            return Err(Error::Shape {
                op: "nearest_neighbors",
                left: (1, query.len()),
                right: real.shape(),
            });
        }
        let mut all: Vec<Neighbor> = real
            .iter_rows()
            .enumerate()
            .map(|(index, row)| Neighbor {
                index,
                distance: query.iter().zip(row).map(|(x, y)| (x - y) * (x - y)).sum(),
            })
            .collect();
        let k = s.min(all.len());
        let by_key = |a: &Neighbor, b: &Neighbor| {
            a.distance
                .partial_cmp(&b.distance)
                .unwrap_or(Ordering::Equal)
                .then(a.index.cmp(&b.index))
        };
        if k < all.len() {
            all.select_nth_unstable_by(k, by_key);
            all.truncate(k);
        }
        all.sort_by(by_key);
        Ok(NeighborSet { neighbors: all })
    }

    /// Inverse-distance weighted mean of `labels` over the set. An exact
    /// match returns that row's label.
    pub fn weighted_label(&self, labels: &[f64]) -> f64 {
        let Some(first) = self.neighbors.first() else {
            return f64::NAN;
        };
        if first.distance < ZERO_DISTANCE {
            return labels[first.index];
        }
        let (num, den) = self.neighbors.iter().fold((0.0, 0.0), |(num, den), n| {
            (num + labels[n.index] / n.distance, den + 1.0 / n.distance)
        });
        num / den
    }
}

/// Label for one generated feature row from its `s` nearest real rows.
pub fn knn_label(query: &[f64], real: &Dataset, s: usize) -> Result<f64> {
    if real.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if s == 0 {
        return Err(Error::Config("neighbor count S must be at least 1".into()));
    }
    Ok(NeighborSet::find(query, real.features(), s)?.weighted_label(real.labels()))
}

/// Labels every row of `features` against `real`.
pub fn knn_labels(features: &Matrix, real: &Dataset, s: usize) -> Result<Vec<f64>> {
    features.iter_rows().map(|row| knn_label(row, real, s)).collect()
}

/// How the noise control labels its rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLabels {
    /// Standard normal draws, like the features.
    #[default]
    Gaussian,
    /// Nearest-neighbour labels, as for generated rows.
    Knn,
}

/// Real training rows plus `scale × n` artificial rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPool {
    pub real: Dataset,
    pub artificial: Dataset,
    pub scale: usize,
}

impl AugmentedPool {
    pub fn total_len(&self) -> usize {
        self.real.len() + self.artificial.len()
    }
}

/// Options for VAE-based augmentation beyond the scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct VaeAugmentOptions<'a> {
    /// Round generated one-hot blocks to a single category before labelling.
    pub snap_onehot: Option<&'a Codec>,
}

fn check_scale(scale: usize) -> Result<()> {
    if scale == 0 {
        return Err(Error::Config("augmentation scale must be at least 1".into()));
    }
    if scale > SOFT_MAX_SCALE {
        log::warn!("augmentation scale {scale} exceeds {SOFT_MAX_SCALE}");
    }
    Ok(())
}

/// Decodes `scale × n_train` prior samples and labels them by KNN.
pub fn augment_vae<R: Rng + ?Sized>(
    train: &Dataset,
    params: &VaeParams,
    scale: usize,
    s: usize,
    options: VaeAugmentOptions<'_>,
    rng: &mut R,
) -> Result<AugmentedPool> {
    check_scale(scale)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut features = vae::generate(params, scale * train.len(), rng)?;
    if let Some(codec) = options.snap_onehot {
        codec.snap_onehot(&mut features);
    }
    let labels = knn_labels(&features, train, s)?;
    let n = labels.len();
    Ok(AugmentedPool {
        real: train.clone(),
        artificial: Dataset::new(features, labels, vec![Origin::Vae; n])?,
        scale,
    })
}

/// `scale × n_train` rows of standard normal features (and labels, unless
/// `labels` asks for nearest-neighbour labels).
pub fn augment_noise<R: Rng + ?Sized>(
    train: &Dataset,
    scale: usize,
    labels: NoiseLabels,
    s: usize,
    rng: &mut R,
) -> Result<AugmentedPool> {
    check_scale(scale)?;
    let n = scale * train.len();
    let features = standard_normal(n, train.dims(), rng);
    let ys = match labels {
        NoiseLabels::Gaussian => standard_normal(1, n, rng).into_vec(),
        NoiseLabels::Knn => knn_labels(&features, train, s)?,
    };
    Ok(AugmentedPool {
        real: train.clone(),
        artificial: Dataset::new(features, ys, vec![Origin::Noise; n])?,
        scale,
    })
}

/// Real and artificial rows concatenated and shuffled together.
pub fn combine<R: Rng + ?Sized>(pool: &AugmentedPool, rng: &mut R) -> Result<Dataset> {
    let all = pool.real.concat(&pool.artificial)?;
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(rng);
    Ok(all.select(&order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(rows: &[Vec<f64>], labels: &[f64]) -> Dataset {
        Dataset::new(Matrix::from_rows(rows).unwrap(), labels.to_vec(), vec![Origin::Real; labels.len()])
            .unwrap()
    }

    fn random_real(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Dataset {
        let x = standard_normal(n, m, rng);
        let y = standard_normal(1, n, rng).into_vec();
        Dataset::new(x, y, vec![Origin::Real; n]).unwrap()
    }

    #[test]
    fn distance_reference_values() {
        assert_eq!(squared_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(squared_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert!(squared_distance(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = standard_normal(1, 5, &mut rng);
            let b = standard_normal(1, 5, &mut rng);
            assert_eq!(
                squared_distance(a.as_slice(), b.as_slice()).unwrap(),
                squared_distance(b.as_slice(), a.as_slice()).unwrap()
            );
        }
    }

    #[test]
    fn single_neighbor_takes_nearest_label() {
        let r = real(&[vec![0.0], vec![5.0], vec![9.0]], &[1.0, 2.0, 3.0]);
        assert_eq!(knn_label(&[6.0], &r, 1).unwrap(), 2.0);
    }

    #[test]
    fn inverse_distance_two_neighbors() {
        // squared distances 1 and 3 from the origin
        let r = real(&[vec![1.0, 0.0], vec![1.0, 2.0f64.sqrt()], vec![10.0, 10.0]], &[0.0, 4.0, 100.0]);
        let y = knn_label(&[0.0, 0.0], &r, 2).unwrap();
        assert!((y - 1.0).abs() < 1e-12, "{y}");
    }

    #[test]
    fn coincident_row_returns_its_label() {
        let r = real(&[vec![0.0, 1.0], vec![2.0, 2.0]], &[-3.0, 7.0]);
        assert_eq!(knn_label(&[2.0, 2.0], &r, 2).unwrap(), 7.0);
    }

    #[test]
    fn neighbor_set_clamps_to_dataset_size() {
        let r = real(&[vec![0.0], vec![1.0]], &[0.0, 1.0]);
        let set = NeighborSet::find(&[0.2], r.features(), 5).unwrap();
        assert_eq!(set.neighbors.len(), 2);
        assert!(set.neighbors[0].distance <= set.neighbors[1].distance);
    }

    #[test]
    fn knn_rejects_bad_inputs() {
        let r = real(&[vec![0.0]], &[0.0]);
        assert!(knn_label(&[0.0], &r, 0).is_err());
        assert!(knn_label(&[0.0], &Dataset::empty(1), 1).is_err());
    }

    #[test]
    fn vae_pool_sizes_and_label_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train = random_real(40, 3, &mut rng);
        let params = VaeParams::init(3, 8, 2, Activation::Tanh, &mut rng);
        for scale in [1, 10] {
            let pool = augment_vae(&train, &params, scale, 5, VaeAugmentOptions::default(), &mut rng).unwrap();
            assert_eq!(pool.artificial.len(), 40 * scale);
            assert!(pool.artificial.origins().iter().all(|o| *o == Origin::Vae));
            for (row, y) in pool.artificial.features().iter_rows().zip(pool.artificial.labels()) {
                let set = NeighborSet::find(row, train.features(), 5).unwrap();
                let ys: Vec<f64> = set.neighbors.iter().map(|n| train.labels()[n.index]).collect();
                let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(*y >= lo - 1e-12 && *y <= hi + 1e-12);
            }
        }
        assert!(augment_vae(&train, &params, 0, 5, VaeAugmentOptions::default(), &mut rng).is_err());
    }

    #[test]
    fn noise_pool_counts_and_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train = random_real(10, 4, &mut rng);
        let pool = augment_noise(&train, 2, NoiseLabels::Gaussian, 5, &mut rng).unwrap();
        assert_eq!(pool.artificial.len(), 20);

        let big = random_real(1250, 4, &mut rng);
        let pool = augment_noise(&big, 2, NoiseLabels::Gaussian, 5, &mut rng).unwrap();
        let cells = pool.artificial.features().as_slice();
        assert_eq!(cells.len(), 10_000);
        let mean = cells.iter().sum::<f64>() / cells.len() as f64;
        assert!(mean.abs() < 0.05, "{mean}");
    }

    #[test]
    fn noise_pool_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let train = random_real(10, 2, &mut rng);
        let a = augment_noise(&train, 3, NoiseLabels::Gaussian, 5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = augment_noise(&train, 3, NoiseLabels::Gaussian, 5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let k = augment_noise(&train, 1, NoiseLabels::Knn, 3, &mut rng).unwrap();
        let expect = knn_labels(k.artificial.features(), &train, 3).unwrap();
        assert_eq!(k.artificial.labels(), expect.as_slice());
    }

    #[test]
    fn combine_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let train = random_real(12, 2, &mut rng);
        let pool = augment_noise(&train, 3, NoiseLabels::Gaussian, 5, &mut rng).unwrap();
        let combined = combine(&pool, &mut rng).unwrap();
        assert_eq!(combined.len(), 4 * 12);
        let mut got: Vec<(u64, Origin)> =
            combined.labels().iter().zip(combined.origins()).map(|(y, o)| (y.to_bits(), *o)).collect();
        let mut want: Vec<(u64, Origin)> = train
            .labels()
            .iter()
            .chain(pool.artificial.labels())
            .zip(train.origins().iter().chain(pool.artificial.origins()))
            .map(|(y, o)| (y.to_bits(), *o))
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);

        let empty = AugmentedPool { real: train.clone(), artificial: Dataset::empty(2), scale: 0 };
        let shuffled = combine(&empty, &mut rng).unwrap();
        assert_eq!(shuffled.len(), 12);
        assert!(shuffled.all_real());
    }
}
