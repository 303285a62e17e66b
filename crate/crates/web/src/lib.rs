//! Browser demo: log-Mel of a synthetic waveform, decision curves on a generated cohort and
//! the decision regions of a small boosted model on 2-D points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sevfuse::audiofeat::{logmel, N_MELS, TARGET_RATE};
use sevfuse::boost::{fit_gbdt, inverse_class_frequency, TrainConfig};
use sevfuse::eval::cv::{run_cv, CvConfig, CvData, Task};
use sevfuse::fusion::{Modality, ModalitySubset};
use sevfuse::synth::{generate, SynthSpec};
use sevfuse::Matrix;
use wasm_bindgen::prelude::*;

/// Frames × 64 log-Mel energies of `seconds` of a sine at `freq_hz` plus uniform noise.
pub fn tone_logmel(freq_hz: f64, noise: f64, seconds: f64, seed: u64) -> sevfuse::Result<(usize, Vec<f64>)> {
    let n = (seconds.clamp(0.05, 10.0) * TARGET_RATE as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = std::f64::consts::TAU * freq_hz / TARGET_RATE as f64;
    let wave: Vec<f64> = (0..n)
        .map(|t| 0.5 * (w * t as f64).sin() + noise * rng.gen_range(-1.0..1.0))
        .collect();
    let m = logmel(&wave)?;
    Ok((m.frames(), m.values().to_vec()))
}

fn quick_train() -> TrainConfig {
    TrainConfig {
        n_trees: 60,
        learning_rate: 0.2,
        max_depth: 3,
        n_bins: 32,
        early_stopping_rounds: 10,
        ..TrainConfig::default()
    }
}

/// `[threshold, model, treat_all]` triples for one PTSD class, from 5-fold CV on the text block.
pub fn cohort_decision_curve(n: usize, signal: f64, seed: u64, class: usize) -> sevfuse::Result<Vec<f64>> {
    let spec = SynthSpec { n, seed, signal, ..SynthSpec::default() };
    let m = generate(&spec)?.matrix;
    let cfg = CvConfig { train: quick_train(), bootstrap_reps: 0, ..CvConfig::default() };
    let rep = run_cv(&CvData::new(&m, Task::Ptsd), ModalitySubset::only(Modality::Text), &cfg)?;
    Ok(rep
        .net_benefit
        .iter()
        .filter(|r| r.class == class)
        .flat_map(|r| [r.threshold, r.model, r.treat_all])
        .collect())
}

/// Three noisy arcs in `[-1, 1]²` as `(x, y, label)`.
pub fn toy_points(n: usize, seed: u64) -> Vec<(f64, f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = i % 3;
            let t: f64 = rng.gen_range(0.0..1.0);
            let ang = t * 2.2 + c as f64 * std::f64::consts::TAU / 3.0;
            let r = 0.2 + 0.7 * t;
            (
                r * ang.cos() + rng.gen_range(-0.08..0.08),
                r * ang.sin() + rng.gen_range(-0.08..0.08),
                c,
            )
        })
        .collect()
}

/// Class probabilities on a `grid × grid` lattice over `[-1, 1]²`, row-major with 3 per cell.
pub fn toy_regions(n_trees: usize, depth: usize, grid: usize, seed: u64) -> sevfuse::Result<Vec<f64>> {
    let pts = toy_points(300, seed);
    let x = Matrix::from_rows(&pts.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>());
    let y: Vec<usize> = pts.iter().map(|p| p.2).collect();
    let cfg = TrainConfig {
        n_trees: n_trees.clamp(1, 500),
        max_depth: depth.clamp(1, 8),
        learning_rate: 0.3,
        colsample: 1.0,
        n_bins: 64,
        early_stopping_rounds: 0,
        seed,
        ..TrainConfig::default()
    };
    let model = fit_gbdt(&x, &y, &inverse_class_frequency(&y, 3)?, &cfg, 0.0)?;
    let g = grid.clamp(2, 200);
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (g - 1) as f64;
    let mut cells = Vec::with_capacity(g * g);
    for r in 0..g {
        for c in 0..g {
            cells.push(vec![coord(c), -coord(r)]);
        }
    }
    Ok(model.predict_proba(&Matrix::from_rows(&cells))?.data().to_vec())
}

fn js(e: sevfuse::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn mel_bins() -> usize {
    N_MELS
}

/// Flattened log-Mel matrix; its length divided by `mel_bins()` is the frame count.
#[wasm_bindgen]
pub fn demo_logmel(freq_hz: f64, noise: f64, seconds: f64) -> Result<Vec<f64>, JsError> {
    tone_logmel(freq_hz, noise, seconds, 1).map(|(_, v)| v).map_err(js)
}

#[wasm_bindgen]
pub fn demo_decision_curve(n: usize, signal: f64, seed: u32, class: usize) -> Result<Vec<f64>, JsError> {
    cohort_decision_curve(n, signal, u64::from(seed), class).map_err(js)
}

/// Training points as `[x, y, label, ...]`.
#[wasm_bindgen]
pub fn demo_toy_points(seed: u32) -> Vec<f64> {
    toy_points(300, u64::from(seed))
        .into_iter()
        .flat_map(|(x, y, c)| [x, y, c as f64])
        .collect()
}

#[wasm_bindgen]
pub fn demo_toy_regions(n_trees: usize, depth: usize, grid: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    toy_regions(n_trees, depth, grid, u64::from(seed)).map_err(js)
}
