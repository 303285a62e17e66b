//! Seeded stratified K-fold partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::objective::class_counts;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn n(&self) -> usize {
        self.folds.iter().map(|f| f.valid.len()).sum()
    }

    /// Fold index holding each sample out.
    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![usize::MAX; self.n()];
        for (f, fold) in self.folds.iter().enumerate() {
            for &i in &fold.valid {
                a[i] = f;
            }
        }
        a
    }
}

/// Shuffle each class with `seed`, then deal its members round-robin over the folds.
///
/// The dealing position carries over from one class to the next so fold sizes differ by at
/// most one overall as well as per class. Only the labels are read.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let counts = class_counts(labels, n_classes);
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 && cnt < k {
            return Err(Error::Data(format!("class {c} has {cnt} samples, fewer than {k} folds")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut valid: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut pos = 0usize;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            valid[pos % k].push(i);
            pos += 1;
        }
    }
    let mut fold_of = vec![0usize; labels.len()];
    for (f, v) in valid.iter_mut().enumerate() {
        v.sort_unstable();
        for &i in v.iter() {
            fold_of[i] = f;
        }
    }
    let folds = valid
        .into_iter()
        .enumerate()
        .map(|(f, v)| Fold {
            train: (0..labels.len()).filter(|&i| fold_of[i] != f).collect(),
            valid: v,
        })
        .collect();
    Ok(FoldPlan { seed, folds })
}
