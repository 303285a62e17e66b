//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sevfuse::boost::tree::{Node, Tree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `-w log softmax(margins)[label]`, written without shared helpers.
pub fn sample_ce(margins: &[f64], label: usize, w: f64) -> f64 {
    let m = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + margins.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    -w * (margins[label] - lse)
}

/// Best root split by scanning every boundary between distinct values of every feature.
///
/// Returns `(feature, left-membership, gain)`.
pub fn brute_split(x: &[Vec<f64>], g: &[f64], h: &[f64], lambda: f64, mcw: f64) -> Option<(usize, Vec<bool>, f64)> {
    let n = x.len();
    let gt: f64 = g.iter().sum();
    let ht: f64 = h.iter().sum();
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut best: Option<(usize, Vec<bool>, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let left: Vec<bool> = (0..n).map(|i| x[i][f] <= w[0]).collect();
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n {
                if left[i] {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let (gr, hr) = (gt - gl, ht - hl);
            if hl < mcw || hr < mcw {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gt, ht));
            let better = match &best {
                None => gain > 0.0,
                Some(b) => gain > b.2,
            };
            if better {
                best = Some((f, left, gain));
            }
        }
    }
    best
}

/// Path-dependent conditional expectation of a tree given that features in `known` are fixed.
pub fn cond_expectation(tree: &Tree, node: usize, x: &[f64], known: &[bool]) -> f64 {
    match tree.nodes[node] {
        Node::Leaf { value, .. } => value,
        Node::Split { feature, threshold, left, right, cover } => {
            if known[feature] {
                let next = if x[feature] < threshold { left } else { right };
                cond_expectation(tree, next, x, known)
            } else {
                let cl = tree.nodes[left].cover();
                let cr = tree.nodes[right].cover();
                (cl * cond_expectation(tree, left, x, known) + cr * cond_expectation(tree, right, x, known)) / cover
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Shapley values by enumerating every coalition of `m` features.
pub fn brute_shapley(tree: &Tree, x: &[f64], m: usize) -> Vec<f64> {
    let mut phi = vec![0.0; m];
    for i in 0..m {
        for mask in 0u32..(1 << m) {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let wgt = factorial(s) * factorial(m - s - 1) / factorial(m);
            let mut known: Vec<bool> = (0..m).map(|j| mask & (1 << j) != 0).collect();
            let without = cond_expectation(tree, 0, x, &known);
            known[i] = true;
            let with = cond_expectation(tree, 0, x, &known);
            phi[i] += wgt * (with - without);
        }
    }
    phi
}

/// A random tree of depth ≤ `depth` over `m` features, covers summing consistently.
pub fn random_tree(r: &mut ChaCha8Rng, depth: usize, m: usize) -> Tree {
    fn build(r: &mut ChaCha8Rng, depth: usize, m: usize, nodes: &mut Vec<Node>) -> usize {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, cover: 0.0 });
        if depth == 0 || r.gen_bool(0.2) {
            nodes[idx] = Node::Leaf {
                value: r.gen_range(-2.0..2.0),
                cover: r.gen_range(0.5..5.0),
            };
            return idx;
        }
        let feature = r.gen_range(0..m);
        let threshold = r.gen_range(-1.0..1.0);
        let left = build(r, depth - 1, m, nodes);
        let right = build(r, depth - 1, m, nodes);
        let cover = nodes[left].cover() + nodes[right].cover();
        nodes[idx] = Node::Split { feature, threshold, left, right, cover };
        idx
    }
    let mut nodes = Vec::new();
    build(r, depth, m, &mut nodes);
    Tree { nodes }
}

// ----- metric oracles, each from its textbook definition -----

pub fn oracle_acc(y: &[usize], p: &[usize]) -> f64 {
    y.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

/// Per-class F1 from precision and recall, 0 where undefined.
pub fn oracle_f1(y: &[usize], p: &[usize], k: usize) -> Vec<f64> {
    (0..k)
        .map(|c| {
            let tp = y.iter().zip(p).filter(|(&a, &b)| a == c && b == c).count() as f64;
            let pp = p.iter().filter(|&&b| b == c).count() as f64;
            let ap = y.iter().filter(|&&a| a == c).count() as f64;
            let prec = if pp > 0.0 { tp / pp } else { 0.0 };
            let rec = if ap > 0.0 { tp / ap } else { 0.0 };
            if prec + rec > 0.0 {
                2.0 * prec * rec / (prec + rec)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn oracle_f1_weighted(y: &[usize], p: &[usize], k: usize) -> f64 {
    let f = oracle_f1(y, p, k);
    (0..k)
        .map(|c| f[c] * y.iter().filter(|&&a| a == c).count() as f64)
        .sum::<f64>()
        / y.len() as f64
}

/// MCC as the correlation of one-hot truth and prediction matrices.
pub fn oracle_mcc(y: &[usize], p: &[usize], k: usize) -> f64 {
    let n = y.len() as f64;
    let onehot = |v: &[usize]| -> Vec<Vec<f64>> {
        v.iter().map(|&c| (0..k).map(|j| f64::from(u8::from(j == c))).collect()).collect()
    };
    let (a, b) = (onehot(y), onehot(p));
    let mean = |m: &Vec<Vec<f64>>, j: usize| m.iter().map(|r| r[j]).sum::<f64>() / n;
    let cov = |m1: &Vec<Vec<f64>>, m2: &Vec<Vec<f64>>| -> f64 {
        (0..k)
            .map(|j| {
                let (u, v) = (mean(m1, j), mean(m2, j));
                m1.iter().zip(m2).map(|(r1, r2)| (r1[j] - u) * (r2[j] - v)).sum::<f64>()
            })
            .sum()
    };
    cov(&a, &b) / (cov(&a, &a) * cov(&b, &b)).sqrt()
}

pub fn oracle_kappa(y: &[usize], p: &[usize], k: usize) -> f64 {
    let n = y.len() as f64;
    let po = oracle_acc(y, p);
    let pe: f64 = (0..k)
        .map(|c| {
            let a = y.iter().filter(|&&v| v == c).count() as f64 / n;
            let b = p.iter().filter(|&&v| v == c).count() as f64 / n;
            a * b
        })
        .sum();
    (po - pe) / (1.0 - pe)
}

/// Probability that a random positive outranks a random negative, ties counting half.
pub fn oracle_auc(pos: &[bool], s: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..s.len() {
        for j in 0..s.len() {
            if pos[i] && !pos[j] {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn oracle_net_benefit(pos: &[bool], s: &[f64], pt: f64) -> f64 {
    let n = pos.len() as f64;
    let tp = pos.iter().zip(s).filter(|(&p, &v)| p && v >= pt).count() as f64;
    let fp = pos.iter().zip(s).filter(|(&p, &v)| !p && v >= pt).count() as f64;
    tp / n - fp / n * pt / (1.0 - pt)
}

pub fn oracle_rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// CCC via Pearson r: `2 r σa σb / (σa² + σb² + (μa − μb)²)`.
pub fn oracle_ccc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sa = (a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n).sqrt();
    let sb = (b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n).sqrt();
    let r = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n / (sa * sb);
    2.0 * r * sa * sb / (sa * sa + sb * sb + (ma - mb).powi(2))
}
