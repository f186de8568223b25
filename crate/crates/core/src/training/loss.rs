use crate::{Error, Result};

/// Softmax with max-subtraction.
pub fn softmax(y: &[f64]) -> Vec<f64> {
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = y.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(y)` against `label`, and its gradient
/// `softmax(y) - onehot(label)` with respect to `y`.
pub fn softmax_cross_entropy(y: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= y.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output"));
    }
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = y.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    // -log p[label] = log(sum exp(y - max)) - (y[label] - max)
    let loss = log_sum - (y[label] - max);
    let mut grad = softmax(y);
    grad[label] -= 1.0;
    Ok((loss.max(0.0), grad))
}
