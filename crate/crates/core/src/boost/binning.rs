//! Weighted-quantile feature binning for histogram split search.
//!
//! A value `x` falls in bin `#{c in cuts : c <= x}`; splitting after bin `b` sends
//! `x < cuts[b]` left.

use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    /// Column-major bin indices.
    bins: Vec<u16>,
    cuts: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    pub fn column(&self, f: usize) -> &[u16] {
        &self.bins[f * self.n_rows..(f + 1) * self.n_rows]
    }

    pub fn cuts(&self, f: usize) -> &[f64] {
        &self.cuts[f]
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.cuts[f].len() + 1
    }

    pub fn max_bins(&self) -> usize {
        self.cuts.iter().map(|c| c.len() + 1).max().unwrap_or(1)
    }
}

/// Cut points for one feature: midpoints between consecutive distinct values when there are
/// at most `n_bins` of them, otherwise boundaries at weighted quantiles.
pub fn feature_cuts(values: &[f64], weights: &[f64], n_bins: usize) -> Vec<f64> {
    let mut pairs: Vec<(f64, f64)> = values.iter().cloned().zip(weights.iter().cloned()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uniq: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (v, w) in pairs {
        match uniq.last_mut() {
            Some(last) if last.0 == v => last.1 += w,
            _ => uniq.push((v, w)),
        }
    }
    if uniq.len() <= 1 {
        return Vec::new();
    }
    if uniq.len() <= n_bins {
        return uniq.windows(2).map(|p| midpoint(p[0].0, p[1].0)).collect();
    }
    let total: f64 = uniq.iter().map(|p| p.1).sum();
    let mut cuts = Vec::with_capacity(n_bins - 1);
    let mut cum = 0.0;
    let mut next_q = 1;
    for i in 0..uniq.len() - 1 {
        cum += uniq[i].1;
        if next_q < n_bins && cum >= total * next_q as f64 / n_bins as f64 {
            cuts.push(midpoint(uniq[i].0, uniq[i + 1].0));
            while next_q < n_bins && cum >= total * next_q as f64 / n_bins as f64 {
                next_q += 1;
            }
        }
    }
    cuts
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding landing on the lower value
    if m <= a {
        b
    } else {
        m
    }
}

pub fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c <= x)
}

/// Bin every column of `x` using sample weights for the quantiles.
pub fn bin_matrix(x: &Matrix, weights: &[f64], n_bins: usize) -> BinnedMatrix {
    let n = x.rows();
    let f = x.cols();
    let mut bins = vec![0u16; n * f];
    let mut cuts = Vec::with_capacity(f);
    let mut col = vec![0.0; n];
    for j in 0..f {
        for (i, c) in col.iter_mut().enumerate() {
            *c = x.get(i, j);
        }
        let cj = feature_cuts(&col, weights, n_bins);
        let out = &mut bins[j * n..(j + 1) * n];
        for (o, &v) in out.iter_mut().zip(&col) {
            *o = bin_of(&cj, v) as u16;
        }
        cuts.push(cj);
    }
    BinnedMatrix { n_rows: n, bins, cuts }
}
