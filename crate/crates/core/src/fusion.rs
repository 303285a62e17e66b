//! Concatenation of modality blocks, per-fold standardisation, and the on-disk feature cache.
//!
//! Cache directory layout:
//! - `manifest.json`: `{format_version, n, dim, ids, y_dep, y_ptsd, modality_mask, x_sha256}`
//! - `X.f32le`: row-major little-endian `f32`, `n * dim * 4` bytes

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audiofeat::{AudioFeature, AUDIO_DIM};
use crate::error::{Error, Result};
use crate::facefeat::{FaceFeature, FACE_DIM};
use crate::matrix::Matrix;
use crate::textemb::{TextEmbedding, TEXT_DIM};

pub const FUSED_DIM: usize = AUDIO_DIM + FACE_DIM + TEXT_DIM;
pub const AUDIO_COLS: Range<usize> = 0..AUDIO_DIM;
pub const FACE_COLS: Range<usize> = AUDIO_DIM..AUDIO_DIM + FACE_DIM;
pub const TEXT_COLS: Range<usize> = AUDIO_DIM + FACE_DIM..FUSED_DIM;
pub const STD_FLOOR: f64 = 1e-8;
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Audio,
    Face,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Audio, Modality::Face, Modality::Text];

    pub fn columns(self) -> Range<usize> {
        match self {
            Modality::Audio => AUDIO_COLS,
            Modality::Face => FACE_COLS,
            Modality::Text => TEXT_COLS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Audio => "AUDIO",
            Modality::Face => "FACE",
            Modality::Text => "TEXT",
        }
    }

    /// Modality owning a fused column index.
    pub fn of_column(col: usize) -> Option<Modality> {
        Modality::ALL.into_iter().find(|m| m.columns().contains(&col))
    }
}

/// Non-empty set of modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModalitySubset {
    pub audio: bool,
    pub face: bool,
    pub text: bool,
}

impl ModalitySubset {
    pub const ALL: ModalitySubset = ModalitySubset {
        audio: true,
        face: true,
        text: true,
    };

    pub fn only(m: Modality) -> Self {
        let mut s = ModalitySubset {
            audio: false,
            face: false,
            text: false,
        };
        s.set(m, true);
        s
    }

    pub fn contains(&self, m: Modality) -> bool {
        match m {
            Modality::Audio => self.audio,
            Modality::Face => self.face,
            Modality::Text => self.text,
        }
    }

    fn set(&mut self, m: Modality, on: bool) {
        match m {
            Modality::Audio => self.audio = on,
            Modality::Face => self.face = on,
            Modality::Text => self.text = on,
        }
    }

    pub fn without(mut self, m: Modality) -> Self {
        self.set(m, false);
        self
    }

    pub fn modalities(&self) -> Vec<Modality> {
        Modality::ALL.into_iter().filter(|m| self.contains(*m)).collect()
    }

    /// Fused column indices of this subset, in audio‖face‖text order.
    pub fn columns(&self) -> Vec<usize> {
        self.modalities().into_iter().flat_map(|m| m.columns()).collect()
    }

    pub fn width(&self) -> usize {
        self.modalities().iter().map(|m| m.columns().len()).sum()
    }

    /// The seven non-empty subsets, unimodal first.
    pub fn standard() -> Vec<ModalitySubset> {
        ["TEXT", "AUDIO", "FACE", "AUDIO+TEXT", "AUDIO+FACE", "TEXT+FACE", "ALL"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }
}

impl fmt::Display for ModalitySubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == ModalitySubset::ALL {
            return write!(f, "ALL");
        }
        // naming follows the results table: AUDIO+TEXT, AUDIO+FACE, TEXT+FACE
        let names: Vec<&str> = [Modality::Audio, Modality::Text, Modality::Face]
            .into_iter()
            .filter(|m| self.contains(*m))
            .map(Modality::name)
            .collect();
        write!(f, "{}", names.join("+"))
    }
}

impl FromStr for ModalitySubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        if up == "ALL" {
            return Ok(ModalitySubset::ALL);
        }
        if let Some(rest) = up.strip_prefix("ALL-").or_else(|| up.strip_prefix("ALL_MINUS_")) {
            let m = parse_modality(rest)?;
            return Ok(ModalitySubset::ALL.without(m));
        }
        let mut out = ModalitySubset {
            audio: false,
            face: false,
            text: false,
        };
        for part in up.split('+') {
            out.set(parse_modality(part)?, true);
        }
        Ok(out)
    }
}

fn parse_modality(s: &str) -> Result<Modality> {
    match s.trim() {
        "AUDIO" | "A" => Ok(Modality::Audio),
        "FACE" | "F" | "VIDEO" => Ok(Modality::Face),
        "TEXT" | "T" => Ok(Modality::Text),
        other => Err(Error::Config(format!("unknown modality '{other}'"))),
    }
}

/// Concatenate the three blocks into one 1536-D row.
pub fn fuse(a: &AudioFeature, f: &FaceFeature, t: &TextEmbedding) -> Result<Vec<f32>> {
    let blocks = [
        ("audio", &a.vector, AUDIO_DIM),
        ("face", &f.vector, FACE_DIM),
        ("text", &t.vector, TEXT_DIM),
    ];
    let mut row = Vec::with_capacity(FUSED_DIM);
    for (name, v, dim) in blocks {
        if v.len() != dim {
            return Err(Error::Domain(format!(
                "{name} block has length {}, expected {dim}",
                v.len()
            )));
        }
        row.extend(v.iter().map(|&x| x as f32));
    }
    Ok(row)
}

/// Pad with zeros or truncate to `len`.
pub fn pad_or_truncate(mut row: Vec<f32>, len: usize) -> Vec<f32> {
    row.resize(len, 0.0);
    row
}

/// Column standardiser fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub fitted_on: usize,
}

/// Per-column mean and population std.
pub fn fit_scaler(x: &Matrix) -> Result<Scaler> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Domain(format!("scaler needs >= 2 rows, got {n}")));
    }
    let d = x.cols();
    let nf = n as f64;
    let mut means = vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= nf);
    // second pass corrects rounding in the mean
    let mut corr = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for r in x.iter_rows() {
        for j in 0..d {
            let dv = r[j] - means[j];
            corr[j] += dv;
            sq[j] += dv * dv;
        }
    }
    let stds = (0..d)
        .map(|j| {
            let c = corr[j] / nf;
            means[j] += c;
            (sq[j] / nf - c * c).max(0.0).sqrt()
        })
        .collect();
    Ok(Scaler {
        means,
        stds,
        fitted_on: n,
    })
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.means[j]) / self.stds[j].max(STD_FLOOR);
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::Domain(format!(
                "scaler fitted on {} columns, got {}",
                self.dim(),
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.transform_row(x.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

/// The cached N × 1536 raw fused features with labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMatrix {
    pub x: Vec<f32>,
    pub ids: Vec<String>,
    pub y_dep: Vec<usize>,
    pub y_ptsd: Vec<usize>,
    /// Per row: audio, face, text present.
    pub modality_mask: Vec<[bool; 3]>,
}

impl FusedMatrix {
    pub fn new(
        x: Vec<f32>,
        ids: Vec<String>,
        y_dep: Vec<usize>,
        y_ptsd: Vec<usize>,
        modality_mask: Vec<[bool; 3]>,
    ) -> Result<Self> {
        let n = ids.len();
        if x.len() != n * FUSED_DIM || y_dep.len() != n || y_ptsd.len() != n || modality_mask.len() != n {
            return Err(Error::Data("fused matrix fields disagree on row count".into()));
        }
        Ok(Self {
            x,
            ids,
            y_dep,
            y_ptsd,
            modality_mask,
        })
    }

    pub fn empty() -> Self {
        Self {
            x: Vec::new(),
            ids: Vec::new(),
            y_dep: Vec::new(),
            y_ptsd: Vec::new(),
            modality_mask: Vec::new(),
        }
    }

    pub fn push(&mut self, id: String, row: Vec<f32>, y_dep: usize, y_ptsd: usize, mask: [bool; 3]) {
        self.x.extend(pad_or_truncate(row, FUSED_DIM));
        self.ids.push(id);
        self.y_dep.push(y_dep);
        self.y_ptsd.push(y_ptsd);
        self.modality_mask.push(mask);
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.x[i * FUSED_DIM..(i + 1) * FUSED_DIM]
    }

    /// Selected columns as an `f64` matrix.
    pub fn to_matrix(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.n() * cols.len());
        for i in 0..self.n() {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j] as f64));
        }
        Matrix::new(self.n(), cols.len(), data)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheManifest {
    format_version: u32,
    n: usize,
    dim: usize,
    ids: Vec<String>,
    y_dep: Vec<usize>,
    y_ptsd: Vec<usize>,
    modality_mask: Vec<[bool; 3]>,
    x_sha256: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const X_FILE: &str = "X.f32le";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_exists(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}

pub fn write_cache(m: &FusedMatrix, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut bytes = Vec::with_capacity(m.x.len() * 4);
    for v in &m.x {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let manifest = CacheManifest {
        format_version: CACHE_FORMAT_VERSION,
        n: m.n(),
        dim: FUSED_DIM,
        ids: m.ids.clone(),
        y_dep: m.y_dep.clone(),
        y_ptsd: m.y_ptsd.clone(),
        modality_mask: m.modality_mask.clone(),
        x_sha256: sha256_hex(&bytes),
    };
    let xp = dir.join(X_FILE);
    fs::write(&xp, &bytes).map_err(|e| Error::io(&xp, e))?;
    let mp = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&mp, json).map_err(|e| Error::io(&mp, e))?;
    Ok(())
}

pub fn read_cache(dir: &Path) -> Result<FusedMatrix> {
    let mp = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let man: CacheManifest =
        serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt(format!("manifest: {e}")))?;
    if man.format_version != CACHE_FORMAT_VERSION {
        return Err(Error::CacheCorrupt(format!(
            "format version {} (expected {CACHE_FORMAT_VERSION})",
            man.format_version
        )));
    }
    if man.dim != FUSED_DIM {
        return Err(Error::CacheCorrupt(format!("dim {} != {FUSED_DIM}", man.dim)));
    }
    if man.n == 0 {
        return Ok(FusedMatrix::empty());
    }
    let xp = dir.join(X_FILE);
    let bytes = fs::read(&xp).map_err(|e| Error::io(&xp, e))?;
    if bytes.len() != man.n * man.dim * 4 {
        return Err(Error::CacheCorrupt(format!(
            "{X_FILE} has {} bytes, expected {}",
            bytes.len(),
            man.n * man.dim * 4
        )));
    }
    if sha256_hex(&bytes) != man.x_sha256 {
        return Err(Error::CacheCorrupt(format!("{X_FILE} checksum mismatch")));
    }
    let x = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FusedMatrix::new(x, man.ids, man.y_dep, man.y_ptsd, man.modality_mask)
        .map_err(|e| Error::CacheCorrupt(e.to_string()))
}
