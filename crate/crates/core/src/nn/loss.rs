use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// `-Σ target_i · log softmax(logits)_i`, stabilized by max subtraction.
pub fn cross_entropy_loss(logits: &[f64], target: &[f64]) -> Result<f64> {
    if logits.len() != target.len() || logits.is_empty() {
        return Err(Error::invalid(format!(
            "logit/target length mismatch: {} vs {}",
            logits.len(),
            target.len()
        )));
    }
    if logits.iter().chain(target).any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite logit or target"));
    }
    if target.iter().any(|&t| t < 0.0) || (target.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("target is not a probability vector"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss: f64 = target
        .iter()
        .zip(logits)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &z)| -t * (z - log_norm))
        .sum();
    Ok(loss.max(0.0))
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut probs = logits.clone();
    for mut row in probs.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let total = row.sum();
        row.mapv_inplace(|e| e / total);
    }
    probs
}

/// Mean cross-entropy over rows and its gradient `(softmax - target) / n`.
pub fn cross_entropy_rows(logits: &Array2<f64>, targets: &Array2<f64>) -> (f64, Array2<f64>) {
    let n = logits.nrows() as f64;
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    for (p, t) in probs.outer_iter().zip(targets.outer_iter()) {
        for (&pi, &ti) in p.iter().zip(t.iter()) {
            if ti != 0.0 {
                loss -= ti * pi.max(f64::MIN_POSITIVE).ln();
            }
        }
    }
    let grad = (probs - targets) / n;
    (loss / n, grad)
}

/// Huber loss with threshold 1 and its derivative.
pub fn huber(err: f64) -> (f64, f64) {
    if err.abs() <= 1.0 {
        (0.5 * err * err, err)
    } else {
        (err.abs() - 0.5, err.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_target_equal_logits_is_ln_k() {
        let k = 20;
        let loss = cross_entropy_loss(&vec![0.7; k], &vec![1.0 / k as f64; k]).unwrap();
        assert!((loss - (k as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn spike_on_target_goes_to_zero() {
        let mut logits = vec![0.0; 5];
        logits[2] = 50.0;
        let mut target = vec![0.0; 5];
        target[2] = 1.0;
        assert!(cross_entropy_loss(&logits, &target).unwrap() < 1e-20);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(cross_entropy_loss(&[0.0, 1.0], &[1.0]).is_err());
        assert!(cross_entropy_loss(&[f64::NAN, 1.0], &[0.5, 0.5]).is_err());
        assert!(cross_entropy_loss(&[0.0, 1.0], &[0.7, 0.7]).is_err());
        assert!(cross_entropy_loss(&[0.0, 1.0], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn rows_match_scalar_version() {
        let logits = array![[0.1, -2.0, 3.0], [1.0, 1.0, 1.0]];
        let targets = array![[0.0, 0.25, 0.75], [1.0, 0.0, 0.0]];
        let (mean, grad) = cross_entropy_rows(&logits, &targets);
        let a = cross_entropy_loss(&[0.1, -2.0, 3.0], &[0.0, 0.25, 0.75]).unwrap();
        let b = cross_entropy_loss(&[1.0, 1.0, 1.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((mean - 0.5 * (a + b)).abs() < 1e-12);
        assert!((grad[[1, 0]] - (1.0 / 3.0 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn huber_branches() {
        assert_eq!(huber(0.5), (0.125, 0.5));
        assert_eq!(huber(-3.0), (2.5, -1.0));
    }
}
