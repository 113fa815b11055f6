use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64], min_len: usize, op: &'static str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op,
            left: (1, a.len()),
            right: (1, b.len()),
        });
    }
    if a.len() < min_len {
        return Err(Error::Degenerate(format!("{op} needs at least {min_len} values, got {}", a.len())));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1, "mae")?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Sample Pearson correlation; `None` when either side has zero variance.
pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b, 2, "pearson_r")?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

/// `100 · (pure − augmented) / pure`; positive means the augmented model
/// has lower error. `None` when `mae_pure` is zero.
pub fn improvement_pct(mae_aug: f64, mae_pure: f64) -> Option<f64> {
    (mae_pure > 0.0).then(|| 100.0 * (mae_pure - mae_aug) / mae_pure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_reference_values() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.5);
        assert!(mae(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mae_is_translation_invariant() {
        let p = [0.3, -1.2, 4.0];
        let t = [1.0, 0.5, 2.5];
        let shift = |v: &[f64]| v.iter().map(|x| x + 7.25).collect::<Vec<_>>();
        assert!((mae(&shift(&p), &shift(&t)).unwrap() - mae(&p, &t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pearson_reference_values() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((pearson_r(&a, &b).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson_r(&a, &neg).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pearson_undefined_for_constant_input() {
        assert_eq!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn improvement_reference_values() {
        assert_eq!(improvement_pct(0.4, 0.4), Some(0.0));
        assert!((improvement_pct(0.3, 1.0).unwrap() - 70.0).abs() < 1e-12);
        assert!(improvement_pct(0.5, 0.4).unwrap() < 0.0);
        assert_eq!(improvement_pct(0.1, 0.0), None);
    }
}
