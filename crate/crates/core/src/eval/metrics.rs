//! Classification metrics computed from labels, predictions and probability scores.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `counts[t][p]`: samples with true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn from_labels(y: &[usize], pred: &[usize], k: usize) -> Result<Self> {
        if y.len() != pred.len() {
            return Err(Error::Domain(format!("{} labels but {} predictions", y.len(), pred.len())));
        }
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in y.iter().zip(pred) {
            if t >= k || p >= k {
                return Err(Error::Domain(format!("class index outside 0..{k}")));
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// True-class totals.
    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Predicted-class totals.
    pub fn predicted(&self) -> Vec<u64> {
        (0..self.k()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub acc: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub recall_macro: f64,
}

/// Per-class `2TP / (2TP + FP + FN)`, zero when the class is absent from both truth and prediction.
pub fn per_class_f1(c: &Confusion) -> Vec<f64> {
    let sup = c.support();
    let pred = c.predicted();
    (0..c.k())
        .map(|i| {
            let tp = c.counts[i][i] as f64;
            let denom = (sup[i] + pred[i]) as f64;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp / denom
            }
        })
        .collect()
}

pub fn per_class_recall(c: &Confusion) -> Vec<f64> {
    let sup = c.support();
    (0..c.k())
        .map(|i| if sup[i] == 0 { 0.0 } else { c.counts[i][i] as f64 / sup[i] as f64 })
        .collect()
}

pub fn basic_from_confusion(c: &Confusion) -> Result<BasicMetrics> {
    let n = c.total();
    if n == 0 {
        return Err(Error::Domain("metrics of an empty sample".into()));
    }
    let nf = n as f64;
    let k = c.k() as f64;
    let f1 = per_class_f1(c);
    let sup = c.support();
    Ok(BasicMetrics {
        acc: c.trace() as f64 / nf,
        f1_weighted: f1.iter().zip(&sup).map(|(f, &s)| f * s as f64).sum::<f64>() / nf,
        f1_macro: f1.iter().sum::<f64>() / k,
        recall_macro: per_class_recall(c).iter().sum::<f64>() / k,
    })
}

pub fn basic_metrics(y: &[usize], pred: &[usize], k: usize) -> Result<BasicMetrics> {
    basic_from_confusion(&Confusion::from_labels(y, pred, k)?)
}

/// Gorodkin's K-class Matthews correlation; `None` when the denominator vanishes.
pub fn mcc_checked(c: &Confusion) -> Option<f64> {
    let s = c.total() as f64;
    let correct = c.trace() as f64;
    let t = c.support();
    let p = c.predicted();
    let tp: f64 = t.iter().zip(&p).map(|(&a, &b)| a as f64 * b as f64).sum();
    let tt: f64 = t.iter().map(|&a| (a as f64).powi(2)).sum();
    let pp: f64 = p.iter().map(|&a| (a as f64).powi(2)).sum();
    let denom = ((s * s - pp) * (s * s - tt)).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    Some((correct * s - tp) / denom)
}

/// [`mcc_checked`] with an undefined value reported as 0.
pub fn mcc_multiclass(c: &Confusion) -> f64 {
    mcc_checked(c).unwrap_or_else(|| {
        warn!("MCC undefined (single class in truth or prediction), reporting 0");
        0.0
    })
}

pub fn kappa_checked(c: &Confusion) -> Option<f64> {
    let n = c.total() as f64;
    if n == 0.0 {
        return None;
    }
    let po = c.trace() as f64 / n;
    let pe: f64 = c
        .support()
        .iter()
        .zip(c.predicted())
        .map(|(&a, b)| a as f64 * b as f64)
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        return None;
    }
    Some((po - pe) / (1.0 - pe))
}

pub fn cohens_kappa(c: &Confusion) -> f64 {
    kappa_checked(c).unwrap_or_else(|| {
        warn!("kappa undefined (chance agreement is 1), reporting 0");
        0.0
    })
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Binary ROC AUC via the Mann-Whitney statistic; `None` without both positives and negatives.
pub fn auc_binary(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let r_pos: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Some((r_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucOvr {
    pub macro_auc: Option<f64>,
    pub per_class: Vec<Option<f64>>,
}

/// One-vs-rest AUC per class, averaged over classes having positives and negatives.
pub fn auc_ovr(y: &[usize], proba: &Matrix) -> AucOvr {
    let per_class: Vec<Option<f64>> = (0..proba.cols())
        .map(|c| {
            let pos: Vec<bool> = y.iter().map(|&t| t == c).collect();
            let s: Vec<f64> = (0..proba.rows()).map(|i| proba.get(i, c)).collect();
            auc_binary(&pos, &s)
        })
        .collect();
    let valid: Vec<f64> = per_class.iter().flatten().copied().collect();
    AucOvr {
        macro_auc: if valid.is_empty() { None } else { Some(valid.iter().sum::<f64>() / valid.len() as f64) },
        per_class,
    }
}

pub fn auc_macro_ovr(y: &[usize], proba: &Matrix) -> Result<f64> {
    let r = auc_ovr(y, proba);
    for (c, a) in r.per_class.iter().enumerate() {
        if a.is_none() {
            warn!("class {c} lacks positives or negatives, skipped in macro AUC");
        }
    }
    r.macro_auc
        .ok_or_else(|| Error::Domain("no class has both positives and negatives".into()))
}

/// Argmax per row, ties to the lowest class.
pub fn argmax_rows(p: &Matrix) -> Vec<usize> {
    p.iter_rows()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub acc: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub recall_macro: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub auc_macro_ovr: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 7] =
        ["acc", "f1_weighted", "f1_macro", "recall_macro", "mcc", "kappa", "auc_macro_ovr"];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "acc" => self.acc,
            "f1_weighted" => self.f1_weighted,
            "f1_macro" => self.f1_macro,
            "recall_macro" => self.recall_macro,
            "mcc" => self.mcc,
            "kappa" => self.kappa,
            "auc_macro_ovr" => self.auc_macro_ovr,
            _ => return None,
        })
    }
}

/// The full metric set; AUC is NaN when undefined.
pub fn metric_set(y: &[usize], proba: &Matrix) -> Result<(MetricSet, Confusion)> {
    let pred = argmax_rows(proba);
    let c = Confusion::from_labels(y, &pred, proba.cols())?;
    let b = basic_from_confusion(&c)?;
    let auc = auc_macro_ovr(y, proba).unwrap_or(f64::NAN);
    Ok((
        MetricSet {
            acc: b.acc,
            f1_weighted: b.f1_weighted,
            f1_macro: b.f1_macro,
            recall_macro: b.recall_macro,
            mcc: mcc_multiclass(&c),
            kappa: cohens_kappa(&c),
            auc_macro_ovr: auc,
        },
        c,
    ))
}
