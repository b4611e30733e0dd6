/// Probabilities are clamped to this value before taking logs so every
/// log-likelihood in the system stays finite.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Floored log-probability of `target` under `softmax(logits)`.
pub fn log_prob(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
    let p = (logits[target] - max).exp() / total;
    p.max(PROB_FLOOR).ln()
}

/// Cross-entropy of `target` under `softmax(logits)` and its gradient with
/// respect to the logits (`softmax - one_hot`).
///
/// Panics if `target` is out of range; callers validate token ids up front.
pub fn softmax_xent(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let mut grad = softmax(logits);
    let loss = -grad[target].max(PROB_FLOOR).ln();
    grad[target] -= 1.0;
    (loss, grad)
}
