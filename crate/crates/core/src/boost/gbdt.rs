//! Multi-class Newton boosting with one regression tree per class per round.

use std::fs;
use std::path::Path;

use log::debug;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::bin_matrix;
use super::objective::{class_counts, grad_hess, softmax_into, weighted_ce, ClassWeights};
use super::tree::{GrowParams, Tree, TreeGrower};
use crate::error::{Error, Result};
use crate::fusion::Scaler;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum Hessian mass in each child of a split.
    pub min_child_weight: f64,
    /// Fraction of rows drawn per round.
    pub subsample: f64,
    /// Fraction of features drawn per tree.
    pub colsample: f64,
    pub l2_lambda: f64,
    pub early_stopping_rounds: usize,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 2000,
            learning_rate: 0.05,
            max_depth: 8,
            min_child_weight: 2.0,
            subsample: 0.9,
            colsample: 0.8,
            l2_lambda: 2.0,
            early_stopping_rounds: 20,
            n_bins: 256,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |v: f64| v > 0.0 && v <= 1.0;
        if !frac_ok(self.subsample) || !frac_ok(self.colsample) {
            return Err(Error::Config("subsample and colsample must lie in (0, 1]".into()));
        }
        if self.learning_rate < 0.0 || self.l2_lambda < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::Config(
                "learning_rate, l2_lambda and min_child_weight must be non-negative".into(),
            ));
        }
        if self.n_bins < 2 || self.n_bins > u16::MAX as usize {
            return Err(Error::Config(format!("n_bins {} outside 2..=65535", self.n_bins)));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Per-class additive tree model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub n_classes: usize,
    pub n_features: usize,
    pub base_score: Vec<f64>,
    /// `trees[k][b]` is the tree of round `b` for class `k`.
    pub trees: Vec<Vec<Tree>>,
    pub best_iteration: usize,
    pub config: TrainConfig,
    /// Applied to raw inputs before the trees when present.
    pub scaler: Option<Scaler>,
    /// Fused-matrix column of each model feature, when trained on a fused subset.
    pub columns: Option<Vec<usize>>,
    /// Internal-holdout weighted CE per round, starting with the base model.
    pub holdout_curve: Vec<f64>,
}

impl BoostedEnsemble {
    /// Model with no trees.
    pub fn constant(base_score: Vec<f64>, n_features: usize, config: TrainConfig) -> Self {
        let k = base_score.len();
        Self {
            n_classes: k,
            n_features,
            base_score,
            trees: vec![Vec::new(); k],
            best_iteration: 0,
            config,
            scaler: None,
            columns: None,
            holdout_curve: Vec::new(),
        }
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::Domain(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Raw input row mapped into the feature space the trees were trained on.
    pub fn prepare_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => {
                let mut out = vec![0.0; row.len()];
                s.transform_row(row, &mut out);
                out
            }
            None => row.to_vec(),
        }
    }

    /// Margins for a prepared row.
    pub fn margins_prepared(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| self.base_score[k] + self.trees[k].iter().map(|t| t.predict(x)).sum::<f64>())
            .collect()
    }

    pub fn margins(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for i in 0..x.rows() {
            let m = self.margins_prepared(&self.prepare_row(x.row(i)));
            out.row_mut(i).copy_from_slice(&m);
        }
        Ok(out)
    }

    /// Softmax over accumulated margins; rows sum to one.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let mut m = self.margins(x)?;
        let mut buf = vec![0.0; self.n_classes];
        for i in 0..m.rows() {
            softmax_into(m.row(i), &mut buf);
            m.row_mut(i).copy_from_slice(&buf);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Seeded stratified holdout: about `fraction` of each class, keeping at least one
/// training row per class. Returns (train, holdout) sorted.
pub fn stratified_holdout(labels: &[usize], k: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut hold = Vec::new();
    if fraction <= 0.0 {
        return ((0..labels.len()).collect(), hold);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed4_01d0_u64);
    for class in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n = members.len();
        let take = ((n as f64 * fraction).round() as usize).min(n.saturating_sub(1));
        let picked = sample(&mut rng, n, take).into_vec();
        let mut is_hold = vec![false; n];
        for p in picked {
            is_hold[p] = true;
        }
        for (j, &m) in members.iter().enumerate() {
            if is_hold[j] {
                hold.push(m);
            } else {
                train.push(m);
            }
        }
    }
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}

fn draw_sorted(rng: &mut ChaCha8Rng, n: usize, frac: f64) -> Vec<usize> {
    if frac >= 1.0 {
        return (0..n).collect();
    }
    let m = ((n as f64 * frac).round() as usize).clamp(1, n);
    let mut v = sample(rng, n, m).into_vec();
    v.sort_unstable();
    v
}

/// Fit a boosted ensemble with `K = weights.n_classes()` classes.
///
/// `eval_fraction` of each class is held out (seeded) to drive early stopping; zero disables
/// early stopping and trains all `n_trees` rounds.
pub fn fit_gbdt(
    x: &Matrix,
    y: &[usize],
    weights: &ClassWeights,
    config: &TrainConfig,
    eval_fraction: f64,
) -> Result<BoostedEnsemble> {
    config.validate()?;
    let k = weights.n_classes();
    if x.rows() != y.len() {
        return Err(Error::Fit(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if k < 2 {
        return Err(Error::Fit("need at least two classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&v| v >= k) {
        return Err(Error::Fit(format!("label {bad} outside 0..{k}")));
    }
    if y.len() < k {
        return Err(Error::Fit(format!("{} rows for {k} classes", y.len())));
    }
    let counts = class_counts(y, k);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Fit("training labels contain a single class".into()));
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Fit(format!("class {missing} absent from training labels")));
    }

    let (train_idx, hold_idx) = stratified_holdout(y, k, eval_fraction, config.seed);
    let xt = x.select_rows(&train_idx);
    let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let xh = x.select_rows(&hold_idx);
    let yh: Vec<usize> = hold_idx.iter().map(|&i| y[i]).collect();
    let n = yt.len();
    let f = x.cols();
    let sample_w: Vec<f64> = yt.iter().map(|&c| weights.get(c)).collect();

    let mut prior = vec![0.0; k];
    for (&c, &w) in yt.iter().zip(&sample_w) {
        prior[c] += w;
    }
    let total: f64 = prior.iter().sum();
    let base_score: Vec<f64> = prior.iter().map(|p| (p / total).max(1e-300).ln()).collect();

    let mut model = BoostedEnsemble::constant(base_score.clone(), f, config.clone());
    let binned = bin_matrix(&xt, &sample_w, config.n_bins);
    let params = GrowParams {
        max_depth: config.max_depth,
        min_child_weight: config.min_child_weight,
        l2_lambda: config.l2_lambda,
        learning_rate: config.learning_rate,
    };

    let mut margins: Vec<f64> = (0..n).flat_map(|_| base_score.iter().cloned()).collect();
    let mut hold_margins: Vec<f64> = (0..yh.len()).flat_map(|_| base_score.iter().cloned()).collect();
    let mut probs = vec![0.0; n * k];
    let mut hold_probs = vec![0.0; yh.len() * k];
    let mut grad = vec![vec![0.0; n]; k];
    let mut hess = vec![vec![0.0; n]; k];
    let mut g_row = vec![0.0; k];
    let mut h_row = vec![0.0; k];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let early = !yh.is_empty() && config.early_stopping_rounds > 0;
    let hold_ce = |hm: &[f64], hp: &mut [f64]| {
        for i in 0..yh.len() {
            softmax_into(&hm[i * k..(i + 1) * k], &mut hp[i * k..(i + 1) * k]);
        }
        weighted_ce(hp, &yh, weights)
    };
    let mut best_ce = if early { hold_ce(&hold_margins, &mut hold_probs) } else { f64::INFINITY };
    model.holdout_curve.push(best_ce);
    let mut best_iter = 0;
    let mut since_best = 0;

    for round in 0..config.n_trees {
        for i in 0..n {
            let p = &mut probs[i * k..(i + 1) * k];
            softmax_into(&margins[i * k..(i + 1) * k], p);
            grad_hess(p, yt[i], sample_w[i], &mut g_row, &mut h_row);
            for c in 0..k {
                grad[c][i] = g_row[c];
                hess[c][i] = h_row[c];
            }
        }
        let rows = draw_sorted(&mut rng, n, config.subsample);
        for c in 0..k {
            let features = draw_sorted(&mut rng, f, config.colsample);
            let grower = TreeGrower {
                data: &binned,
                grad: &grad[c],
                hess: &hess[c],
                features: &features,
                params,
            };
            let tree = grower.grow(&rows);
            for i in 0..n {
                margins[i * k + c] += tree.predict(xt.row(i));
            }
            for i in 0..yh.len() {
                hold_margins[i * k + c] += tree.predict(xh.row(i));
            }
            model.trees[c].push(tree);
        }
        if early {
            let ce = hold_ce(&hold_margins, &mut hold_probs);
            model.holdout_curve.push(ce);
            if ce < best_ce {
                best_ce = ce;
                best_iter = round + 1;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.early_stopping_rounds {
                    debug!("early stop at round {} (best {best_iter})", round + 1);
                    break;
                }
            }
        } else {
            best_iter = round + 1;
        }
    }
    for t in model.trees.iter_mut() {
        t.truncate(best_iter);
    }
    model.best_iteration = best_iter;
    Ok(model)
}
