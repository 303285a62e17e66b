//! Synthetic cohorts with class-conditional mean shifts planted in chosen modality columns.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{DEP_CLASSES, PTSD_CLASSES};
use crate::error::{Error, Result};
use crate::facefeat::FACE_COLUMNS;
use crate::fusion::{FusedMatrix, Modality, ModalitySubset, FUSED_DIM, TEXT_COLS};
use crate::textemb::write_embedding_file;

/// Informative columns per class and task inside each planted modality.
pub const BLOCK: usize = 8;

/// Reference class sizes used by [`ClassMix::Imbalanced`].
pub const DEP_REFERENCE_COUNTS: [usize; DEP_CLASSES] = [187, 96, 64, 43, 15];
pub const PTSD_REFERENCE_COUNTS: [usize; PTSD_CLASSES] = [85, 180, 140];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassMix {
    Balanced,
    /// Proportional to the reference counts.
    Imbalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    /// Mean shift, in noise standard deviations, of each informative column.
    pub signal: f64,
    pub classes: ClassMix,
    pub planted: ModalitySubset,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 400,
            seed: 7,
            signal: 1.5,
            classes: ClassMix::Balanced,
            planted: ModalitySubset::only(Modality::Text),
        }
    }
}

impl FromStr for SynthSpec {
    type Err = Error;

    /// `n=400,seed=7,signal=1.5,classes=balanced,planted=text`; omitted keys keep defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("synthetic spec entry {part:?} is not key=value")))?;
            let bad = |what: &str| Error::Config(format!("synthetic {k}: {what} {v:?}"));
            match k.trim() {
                "n" => spec.n = v.parse().map_err(|_| bad("not a count"))?,
                "seed" => spec.seed = v.parse().map_err(|_| bad("not a seed"))?,
                "signal" | "signal_strength" => spec.signal = v.parse().map_err(|_| bad("not a number"))?,
                "classes" => {
                    spec.classes = match v.to_ascii_lowercase().as_str() {
                        "balanced" => ClassMix::Balanced,
                        "imbalanced" | "reference" => ClassMix::Imbalanced,
                        _ => return Err(bad("unknown class mix")),
                    }
                }
                "planted" => spec.planted = v.replace(' ', "+").parse()?,
                other => return Err(Error::Config(format!("unknown synthetic key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let min = self.min_n();
        if self.n < min {
            return Err(Error::Config(format!("synthetic n must be >= {min}, got {}", self.n)));
        }
        if !self.signal.is_finite() {
            return Err(Error::Config("synthetic signal must be finite".into()));
        }
        Ok(())
    }

    fn min_n(&self) -> usize {
        match self.classes {
            ClassMix::Balanced => DEP_CLASSES,
            ClassMix::Imbalanced => DEP_CLASSES * 4,
        }
    }
}

/// A generated cohort: fused rows plus the questionnaire totals behind each class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub matrix: FusedMatrix,
    pub phq8_totals: Vec<u32>,
    pub pcl_totals: Vec<u32>,
}

/// Class sizes summing to `n`, proportional to `weights` by largest remainder, each ≥ 1.
pub fn allocate(n: usize, weights: &[usize]) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|&w| n as f64 * w as f64 / total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| (e.floor() as usize).max(1)).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut i = 0;
    while counts.iter().sum::<usize>() < n {
        counts[order[i % order.len()]] += 1;
        i += 1;
    }
    while counts.iter().sum::<usize>() > n {
        let j = (0..counts.len()).max_by_key(|&j| (counts[j], usize::MAX - j)).unwrap();
        counts[j] -= 1;
    }
    counts
}

fn labels(n: usize, k: usize, mix: ClassMix, reference: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let counts = match mix {
        ClassMix::Balanced => allocate(n, &vec![1; k]),
        ClassMix::Imbalanced => allocate(n, reference),
    };
    let mut y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &m)| vec![c; m]).collect();
    y.shuffle(rng);
    y
}

const PHQ_BANDS: [(u32, u32); DEP_CLASSES] = [(0, 4), (5, 9), (10, 14), (15, 19), (20, 24)];
const PCL_BANDS: [(u32, u32); PTSD_CLASSES] = [(0, 20), (21, 40), (41, 80)];

/// Column offset, within a modality, of the informative block of `class` for a task.
pub fn block_offset(ptsd: bool, class: usize) -> usize {
    if ptsd {
        (DEP_CLASSES + class) * BLOCK
    } else {
        class * BLOCK
    }
}

/// Unit Gaussian noise everywhere, with `+signal` on the class block of each planted modality.
pub fn generate(spec: &SynthSpec) -> Result<SynthCohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let y_dep = labels(spec.n, DEP_CLASSES, spec.classes, &DEP_REFERENCE_COUNTS, &mut rng);
    let y_ptsd = labels(spec.n, PTSD_CLASSES, spec.classes, &PTSD_REFERENCE_COUNTS, &mut rng);
    let mut m = FusedMatrix::empty();
    let mut phq8_totals = Vec::with_capacity(spec.n);
    let mut pcl_totals = Vec::with_capacity(spec.n);
    let planted = spec.planted.modalities();
    for i in 0..spec.n {
        let mut row: Vec<f32> = (0..FUSED_DIM)
            .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
            .collect();
        for md in &planted {
            let start = md.columns().start;
            for (ptsd, class) in [(false, y_dep[i]), (true, y_ptsd[i])] {
                let off = start + block_offset(ptsd, class);
                for v in &mut row[off..off + BLOCK] {
                    *v += spec.signal as f32;
                }
            }
        }
        let (lo, hi) = PHQ_BANDS[y_dep[i]];
        phq8_totals.push(rng.gen_range(lo..=hi));
        let (lo, hi) = PCL_BANDS[y_ptsd[i]];
        pcl_totals.push(rng.gen_range(lo..=hi));
        m.push(synthetic_id(i), row, y_dep[i], y_ptsd[i], [true; 3]);
    }
    Ok(SynthCohort {
        matrix: m,
        phq8_totals,
        pcl_totals,
    })
}

pub fn synthetic_id(i: usize) -> String {
    format!("{}", 1000 + i)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Lay a small cohort out as participant folders under `root` and return the metadata path.
///
/// Each `<id>_P/` folder holds a short WAV, an OpenFace-style CSV, a speaker-tagged
/// transcript and `<id>.emb.f32le` carrying the row's text columns, so the planted text
/// signal survives a full extraction.
pub fn write_corpus(root: &Path, spec: &SynthSpec) -> Result<PathBuf> {
    let cohort = generate(spec)?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let mut meta = String::from("Participant_ID,PHQ8_Score,PCL-C (PTSD)\n");
    for (i, id) in cohort.matrix.ids.iter().enumerate() {
        let dir = root.join(format!("{id}_P"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let wav = dir.join(format!("{id}_AUDIO.wav"));
        let spec_wav = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&wav, spec_wav).map_err(|e| Error::Data(format!("{}: {e}", wav.display())))?;
        let freq = rng.gen_range(150.0..400.0);
        for t in 0..8000 {
            let s = 0.3 * (2.0 * std::f64::consts::PI * freq * t as f64 / 16_000.0).sin() + rng.gen_range(-0.05..0.05);
            w.write_sample((s * 32767.0) as i16)
                .map_err(|e| Error::Data(format!("{}: {e}", wav.display())))?;
        }
        w.finalize().map_err(|e| Error::Data(format!("{}: {e}", wav.display())))?;

        let mut face = String::from("frame, face_id, timestamp, confidence, success");
        for c in FACE_COLUMNS {
            face.push_str(", ");
            face.push_str(c);
        }
        face.push('\n');
        for frame in 1..=24 {
            let _ = write!(face, "{frame}, 0, {:.3}, 0.98, 1", frame as f64 / 30.0);
            for c in FACE_COLUMNS {
                let v: f64 = if c.ends_with("_c") {
                    f64::from(rng.gen_bool(0.3))
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                let _ = write!(face, ", {v:.4}");
            }
            face.push('\n');
        }
        write_file(&dir.join(format!("{id}_OpenFace2.1.0_Pose_gaze_AUs.csv")), face.as_bytes())?;

        let transcript = "start_time\tstop_time\tspeaker\tvalue\n\
                          0.0\t1.2\tEllie\thow are you doing today\n\
                          1.5\t3.0\tParticipant\ti'm doing okay thanks\n";
        write_file(&dir.join(format!("{id}_TRANSCRIPT.csv")), transcript.as_bytes())?;

        let text: Vec<f32> = cohort.matrix.row(i)[TEXT_COLS].to_vec();
        write_embedding_file(id, &text, &dir)?;

        let _ = writeln!(meta, "{id},{},{}", cohort.phq8_totals[i], cohort.pcl_totals[i]);
    }
    let meta_path = root.join("metadata.csv");
    write_file(&meta_path, meta.as_bytes())?;
    Ok(meta_path)
}
