//! Participant-level percentile bootstrap over a fixed prediction table.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    /// Replicates on which the metric stayed undefined after all redraws.
    pub skipped: usize,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 95% interval of `metric` over `reps` resamples (with replacement) of `0..n`.
///
/// `metric` returns `None` where it is undefined; such a replicate is redrawn up to
/// [`MAX_REDRAWS`] times and otherwise skipped.
pub fn bootstrap_ci<F>(n: usize, reps: usize, seed: u64, mut metric: F) -> Result<BootstrapCi>
where
    F: FnMut(&[usize]) -> Option<f64>,
{
    if n == 0 || reps == 0 {
        return Err(Error::Domain("bootstrap needs rows and replicates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(reps);
    let mut skipped = 0;
    for _ in 0..reps {
        let mut got = None;
        for _ in 0..=MAX_REDRAWS {
            idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
            got = metric(&idx).filter(|v| v.is_finite());
            if got.is_some() {
                break;
            }
        }
        match got {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::Domain("metric undefined on every bootstrap replicate".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(BootstrapCi {
        lo: quantile_sorted(&values, 0.025),
        hi: quantile_sorted(&values, 0.975),
        skipped,
    })
}
