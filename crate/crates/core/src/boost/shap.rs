//! Path-dependent TreeSHAP (Lundberg et al.) with node covers as the conditional weights.

use super::gbdt::BoostedEnsemble;
use super::tree::{Node, Tree};

#[derive(Debug, Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut Vec<PathElem>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElem {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / d1;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / d1;
    }
}

fn unwind_path(path: &mut Vec<PathElem>, index: usize) {
    let depth = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one * d1 / ((i + 1) as f64 * one);
            next_one = tmp - path[i].pweight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].pweight = path[i].pweight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_path_sum(path: &[PathElem], index: usize) -> f64 {
    let depth = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next_one * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next_one = path[i].pweight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].pweight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &Tree,
    x: &[f64],
    phi: &mut [f64],
    node: usize,
    parent: &[PathElem],
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    let mut path = parent.to_vec();
    extend_path(&mut path, zero_fraction, one_fraction, feature);
    match tree.nodes[node] {
        Node::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_path_sum(&path, i);
                let el = path[i];
                if let Some(f) = el.feature {
                    phi[f] += w * (el.one_fraction - el.zero_fraction) * value;
                }
            }
        }
        Node::Split {
            feature: split,
            threshold,
            left,
            right,
            cover,
        } => {
            let (hot, cold) = if x[split] < threshold { (left, right) } else { (right, left) };
            let hot_zero = if cover > 0.0 { tree.nodes[hot].cover() / cover } else { 0.5 };
            let cold_zero = if cover > 0.0 { tree.nodes[cold].cover() / cover } else { 0.5 };
            let mut incoming_zero = 1.0;
            let mut incoming_one = 1.0;
            if let Some(k) = path.iter().position(|e| e.feature == Some(split)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            recurse(tree, x, phi, hot, &path, hot_zero * incoming_zero, incoming_one, Some(split));
            recurse(tree, x, phi, cold, &path, cold_zero * incoming_zero, 0.0, Some(split));
        }
    }
}

/// Add the SHAP values of one tree at `x` into `phi`.
pub fn tree_shap_single(tree: &Tree, x: &[f64], phi: &mut [f64]) {
    recurse(tree, x, phi, 0, &[], 1.0, 1.0, None);
}

/// Per-class attributions and base values for one input row.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapExplanation {
    /// `phi[k][f]`: contribution of feature `f` to the margin of class `k`.
    pub phi: Vec<Vec<f64>>,
    pub base_values: Vec<f64>,
}

impl ShapExplanation {
    /// `base_k + Σ_f φ_{kf}`, which equals the class margin.
    pub fn reconstructed_margin(&self, k: usize) -> f64 {
        self.base_values[k] + self.phi[k].iter().sum::<f64>()
    }
}

/// Expected margin per class under the cover distribution.
pub fn base_values(model: &BoostedEnsemble) -> Vec<f64> {
    (0..model.n_classes)
        .map(|k| model.base_score[k] + model.trees[k].iter().map(Tree::expected_value).sum::<f64>())
        .collect()
}

/// Explain one raw input row (the model's scaler is applied first).
pub fn tree_shap(model: &BoostedEnsemble, row: &[f64]) -> ShapExplanation {
    let x = model.prepare_row(row);
    let phi = (0..model.n_classes)
        .map(|k| {
            let mut p = vec![0.0; model.n_features];
            for t in &model.trees[k] {
                tree_shap_single(t, &x, &mut p);
            }
            p
        })
        .collect();
    ShapExplanation {
        phi,
        base_values: base_values(model),
    }
}
