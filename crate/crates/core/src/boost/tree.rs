//! Regression trees fitted to per-class gradient statistics.

use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        cover: f64,
    },
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match *self {
            Node::Leaf { cover, .. } | Node::Split { cover, .. } => cover,
        }
    }
}

/// Nodes in pre-order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        fn go(t: &Tree, i: usize) -> f64 {
            match t.nodes[i] {
                Node::Leaf { value, .. } => value,
                Node::Split {
                    left, right, cover, ..
                } => {
                    if cover <= 0.0 {
                        return 0.5 * (go(t, left) + go(t, right));
                    }
                    (t.nodes[left].cover() * go(t, left) + t.nodes[right].cover() * go(t, right)) / cover
                }
            }
        }
        go(self, 0)
    }

    pub fn split_features(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                _ => None,
            })
            .collect()
    }
}

/// Parameters that shape a single tree.
#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
}

/// Relative margin below which two gains count as tied.
const TIE_REL: f64 = 1e-12;

fn improves(gain: f64, best: f64) -> bool {
    gain > best + TIE_REL * best.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub bin: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left_g: f64,
    pub left_h: f64,
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let g = gl + gr;
    let h = hl + hr;
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

/// Grows one tree on the rows in `rows` using gradient/hessian vectors indexed by row.
pub struct TreeGrower<'a> {
    pub data: &'a BinnedMatrix,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub features: &'a [usize],
    pub params: GrowParams,
}

impl TreeGrower<'_> {
    pub fn grow(&self, rows: &[usize]) -> Tree {
        let mut nodes = Vec::new();
        self.grow_node(rows.to_vec(), 0, &mut nodes);
        Tree { nodes }
    }

    fn grow_node(&self, rows: Vec<usize>, depth: usize, nodes: &mut Vec<Node>) -> usize {
        let idx = nodes.len();
        let (g, h) = rows
            .iter()
            .fold((0.0, 0.0), |(g, h), &r| (g + self.grad[r], h + self.hess[r]));
        let leaf = Node::Leaf {
            value: -g / (h + self.params.l2_lambda) * self.params.learning_rate,
            cover: h,
        };
        nodes.push(leaf);
        if depth >= self.params.max_depth || rows.len() < 2 {
            return idx;
        }
        let Some(best) = self.best_split(&rows, g, h) else {
            return idx;
        };
        let col = self.data.column(best.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| (col[r] as usize) <= best.bin);
        drop(rows);
        let left = self.grow_node(left_rows, depth + 1, nodes);
        let right = self.grow_node(right_rows, depth + 1, nodes);
        let cover = nodes[left].cover() + nodes[right].cover();
        nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            cover,
        };
        idx
    }

    fn feature_best(&self, f: usize, rows: &[usize], g: f64, h: f64, buf: &mut Vec<(f64, f64)>) -> Option<SplitCandidate> {
        let nb = self.data.n_bins(f);
        if nb < 2 {
            return None;
        }
        buf.clear();
        buf.resize(nb, (0.0, 0.0));
        let col = self.data.column(f);
        for &r in rows {
            let e = &mut buf[col[r] as usize];
            e.0 += self.grad[r];
            e.1 += self.hess[r];
        }
        let p = &self.params;
        let mut best: Option<SplitCandidate> = None;
        let mut best_gain = 0.0;
        let (mut gl, mut hl) = (0.0, 0.0);
        for b in 0..nb - 1 {
            let (bg, bh) = buf[b];
            // an empty bin yields the same partition as the previous boundary
            if bh == 0.0 && bg == 0.0 {
                continue;
            }
            gl += bg;
            hl += bh;
            let (gr, hr) = (g - gl, h - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, p.l2_lambda);
            if improves(gain, best_gain) {
                best_gain = gain;
                best = Some(SplitCandidate {
                    feature: f,
                    bin: b,
                    threshold: self.data.cuts(f)[b],
                    gain,
                    left_g: gl,
                    left_h: hl,
                });
            }
        }
        best
    }

    fn best_split(&self, rows: &[usize], g: f64, h: f64) -> Option<SplitCandidate> {
        let per_feature = self.per_feature_best(rows, g, h);
        let mut best: Option<SplitCandidate> = None;
        for cand in per_feature.into_iter().flatten() {
            match best {
                Some(b) if !improves(cand.gain, b.gain) => {}
                _ => best = Some(cand),
            }
        }
        best
    }

    #[cfg(feature = "parallel")]
    fn per_feature_best(&self, rows: &[usize], g: f64, h: f64) -> Vec<Option<SplitCandidate>> {
        use rayon::prelude::*;
        if rayon::current_num_threads() > 1 && rows.len() * self.features.len() > 1 << 16 {
            return self
                .features
                .par_iter()
                .map_init(Vec::new, |buf, &f| self.feature_best(f, rows, g, h, buf))
                .collect();
        }
        let mut buf = Vec::new();
        self.features
            .iter()
            .map(|&f| self.feature_best(f, rows, g, h, &mut buf))
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn per_feature_best(&self, rows: &[usize], g: f64, h: f64) -> Vec<Option<SplitCandidate>> {
        let mut buf = Vec::new();
        self.features
            .iter()
            .map(|&f| self.feature_best(f, rows, g, h, &mut buf))
            .collect()
    }
}
