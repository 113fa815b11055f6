//! Two-component PCA projection for visual inspection of real versus
//! generated rows.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `n x 2` coordinates of the centered rows on the two components.
    pub coords: Matrix,
    /// `2 x M` unit loadings, largest-magnitude entry of each made positive.
    pub components: Matrix,
    /// All covariance eigenvalues, descending. Covariance uses `1/n`.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Centers the columns of `rows` and projects onto the top two
/// eigenvectors of their covariance.
pub fn pca_project2d(rows: &Matrix) -> Result<Projection> {
    let (n, m) = rows.shape();
    if n < 2 || m < 2 {
        return Err(Error::Degenerate(format!("projection needs n >= 2 and M >= 2, got {n}x{m}")));
    }
    let mean: Vec<f64> = rows.column_sums().as_slice().iter().map(|s| s / n as f64).collect();
    let centered = DMatrix::from_fn(n, m, |r, c| rows.get(r, c) - mean[c]);
    let cov = (centered.transpose() * &centered) / n as f64;
    if cov.trace() <= 1e-300 {
        return Err(Error::Degenerate("data has zero variance".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut components = Matrix::zeros(2, m);
    for (slot, &i) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(i);
        let mut pivot = 0;
        for k in 1..m {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..m {
            components.set(slot, k, sign * v[k]);
        }
    }

    let mut coords = Matrix::zeros(n, 2);
    for r in 0..n {
        for slot in 0..2 {
            let mut acc = 0.0;
            for c in 0..m {
                acc += centered[(r, c)] * components.get(slot, c);
            }
            coords.set(r, slot, acc);
        }
    }
    Ok(Projection {
        coords,
        components,
        eigenvalues,
        mean,
    })
}
