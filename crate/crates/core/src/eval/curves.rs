//! ROC and precision-recall points, and decision-curve net benefit.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    /// FPR for ROC, recall for PR.
    pub x: f64,
    /// TPR for ROC, precision for PR.
    pub y: f64,
}

/// Cumulative (TP, FP) after each distinct score, highest first.
fn sweep(positive: &[bool], scores: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (pos, &i) in order.iter().enumerate() {
        if positive[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last = pos + 1 == order.len() || scores[order[pos + 1]] != scores[i];
        if last {
            out.push((scores[i], tp, fp));
        }
    }
    out
}

/// ROC points from (0, 0) at an infinite threshold down to (1, 1).
pub fn roc_points(positive: &[bool], scores: &[f64]) -> Vec<CurvePoint> {
    let n_pos = positive.iter().filter(|&&p| p).count().max(1) as f64;
    let n_neg = positive.iter().filter(|&&p| !p).count().max(1) as f64;
    let mut pts = vec![CurvePoint { threshold: f64::INFINITY, x: 0.0, y: 0.0 }];
    pts.extend(sweep(positive, scores).into_iter().map(|(t, tp, fp)| CurvePoint {
        threshold: t,
        x: fp as f64 / n_neg,
        y: tp as f64 / n_pos,
    }));
    pts
}

pub fn pr_points(positive: &[bool], scores: &[f64]) -> Vec<CurvePoint> {
    let n_pos = positive.iter().filter(|&&p| p).count().max(1) as f64;
    sweep(positive, scores)
        .into_iter()
        .map(|(t, tp, fp)| CurvePoint {
            threshold: t,
            x: tp as f64 / n_pos,
            y: tp as f64 / (tp + fp) as f64,
        })
        .collect()
}

/// 0.10, 0.15, ..., 0.90.
pub fn threshold_grid() -> Vec<f64> {
    (0..17).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

/// `TP/N - FP/N * p_t / (1 - p_t)` with positive calls at `score >= p_t`.
pub fn net_benefit(positive: &[bool], scores: &[f64], p_t: f64) -> f64 {
    let n = positive.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&p, &s) in positive.iter().zip(scores) {
        if s >= p_t {
            if p {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    // FP/N as called/N - TP/N, so everyone-positive reproduces the treat-all form bit for bit
    let tp_rate = tp as f64 / n;
    let fp_rate = (tp + fp) as f64 / n - tp_rate;
    tp_rate - fp_rate * p_t / (1.0 - p_t)
}

/// Net benefit of calling everyone positive at prevalence `pi`.
pub fn treat_all_net_benefit(pi: f64, p_t: f64) -> f64 {
    pi - (1.0 - pi) * p_t / (1.0 - p_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetBenefitRow {
    pub class: usize,
    pub threshold: f64,
    pub model: f64,
    pub treat_all: f64,
    pub treat_none: f64,
}
