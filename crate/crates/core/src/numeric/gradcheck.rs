//! Central finite differences, used as an independent oracle for the tape.

use super::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Approximates `∂f/∂p` for every coordinate of every parameter by
/// `(f(p + h) - f(p - h)) / 2h`.
pub fn finite_diff<F>(mut f: F, params: &[Matrix], h: f64) -> Result<Vec<Matrix>>
where
    F: FnMut(&[Matrix]) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(format!("finite difference step must be positive, got {h}")));
    }
    let mut work = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut g = Matrix::zeros(params[pi].rows(), params[pi].cols());
        for k in 0..params[pi].len() {
            let orig = params[pi].as_slice()[k];
            work[pi].as_mut_slice()[k] = orig + h;
            let plus = f(&work)?;
            work[pi].as_mut_slice()[k] = orig - h;
            let minus = f(&work)?;
            work[pi].as_mut_slice()[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric("finite_diff evaluation".into()));
            }
            g.as_mut_slice()[k] = (plus - minus) / (2.0 * h);
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Largest violation of `|a - b| <= rel * max(|a|, |b|) + abs` across all
/// coordinates, expressed as `|a - b| / (rel * max(|a|, |b|) + abs)`.
/// Values `<= 1` mean every coordinate passes.
pub fn gradient_mismatch(analytic: &[Matrix], numeric: &[Matrix], rel: f64, abs: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        for (&x, &y) in a.as_slice().iter().zip(n.as_slice()) {
            let tol = rel * x.abs().max(y.abs()) + abs;
            worst = worst.max((x - y).abs() / tol);
        }
    }
    worst
}
