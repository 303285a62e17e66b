//! Softmax link, class-weighted cross-entropy, and its per-sample gradient and diagonal Hessian.

use crate::error::{Error, Result};

pub const PROB_FLOOR: f64 = 1e-15;

/// Max-shifted softmax.
pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; margins.len()];
    softmax_into(margins, &mut out);
    out
}

pub fn softmax_into(margins: &[f64], out: &mut [f64]) {
    let max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &m) in out.iter_mut().zip(margins) {
        *o = (m - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Inverse-frequency class weights `w_k = N / (K · n_k)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(k: usize) -> Self {
        ClassWeights(vec![1.0; k])
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }
}

pub fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &y in labels {
        counts[y] += 1;
    }
    counts
}

/// Weights from the label vector of a training fold with `k` classes.
pub fn inverse_class_frequency(labels: &[usize], k: usize) -> Result<ClassWeights> {
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Domain(format!("label {bad} outside 0..{k}")));
    }
    let counts = class_counts(labels, k);
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Fit(format!("class {missing} absent from training labels")));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights(
        counts.iter().map(|&c| n / (k as f64 * c as f64)).collect(),
    ))
}

/// `−(1/N) Σ_i w_{y_i} log p_{y_i}(x_i)` with probabilities floored at 1e−15.
///
/// `probs` is row-major N × K.
pub fn weighted_ce(probs: &[f64], labels: &[usize], weights: &ClassWeights) -> f64 {
    let k = weights.n_classes();
    if labels.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let p = probs[i * k + y].max(PROB_FLOOR);
        total -= weights.get(y) * p.ln();
    }
    total / labels.len() as f64
}

/// Per-sample, per-class gradient `w_y (p_k − 1[y = k])` and Hessian `w_y p_k (1 − p_k)`.
pub fn grad_hess(probs: &[f64], label: usize, weight: f64, grad: &mut [f64], hess: &mut [f64]) {
    for (k, &p) in probs.iter().enumerate() {
        let target = if k == label { 1.0 } else { 0.0 };
        grad[k] = weight * (p - target);
        hess[k] = weight * p * (1.0 - p);
    }
}
