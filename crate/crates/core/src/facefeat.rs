//! OpenFace per-frame CSV → 512-D face descriptor.

use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

pub const FACE_DIM: usize = 512;

/// Selected OpenFace 2.x columns, in OpenFace header order.
pub const FACE_COLUMNS: [&str; 49] = [
    "gaze_0_x", "gaze_0_y", "gaze_0_z", "gaze_1_x", "gaze_1_y", "gaze_1_z", "gaze_angle_x",
    "gaze_angle_y", "pose_Tx", "pose_Ty", "pose_Tz", "pose_Rx", "pose_Ry", "pose_Rz", "AU01_r",
    "AU02_r", "AU04_r", "AU05_r", "AU06_r", "AU07_r", "AU09_r", "AU10_r", "AU12_r", "AU14_r",
    "AU15_r", "AU17_r", "AU20_r", "AU23_r", "AU25_r", "AU26_r", "AU45_r", "AU01_c", "AU02_c",
    "AU04_c", "AU05_c", "AU06_c", "AU07_c", "AU09_c", "AU10_c", "AU12_c", "AU14_c", "AU15_c",
    "AU17_c", "AU20_c", "AU23_c", "AU25_c", "AU26_c", "AU28_c", "AU45_c",
];

fn is_intensity(name: &str) -> bool {
    name.starts_with("AU") && name.ends_with("_r")
}

/// Selected per-frame series. Columns missing from the file are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrameTable {
    columns: Vec<(&'static str, Option<Vec<f64>>)>,
    confidence: Option<Vec<f64>>,
    rows: usize,
}

impl FaceFrameTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .and_then(|(_, c)| c.as_deref())
    }

    pub fn confidence(&self) -> Option<&[f64]> {
        self.confidence.as_deref()
    }

    /// Names of the selected columns found in the file.
    pub fn present_columns(&self) -> Vec<&'static str> {
        self.columns
            .iter()
            .filter(|(_, c)| c.is_some())
            .map(|(n, _)| *n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceConfig {
    /// Centered moving-average width applied to AU intensity columns; 1 disables it.
    pub smoothing_window: usize,
}

impl Default for FaceConfig {
    fn default() -> Self {
        Self { smoothing_window: 5 }
    }
}

/// 512-D face descriptor with provenance flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFeature {
    pub vector: Vec<f64>,
    pub present: bool,
}

impl FaceFeature {
    pub fn absent() -> Self {
        Self {
            vector: vec![0.0; FACE_DIM],
            present: false,
        }
    }
}

fn norm(h: &str) -> String {
    h.trim().to_ascii_lowercase()
}

/// Parse OpenFace CSV text. Rows with `success == 0` are dropped and the remaining rows are
/// ordered by (`frame`, `face_id`) when those columns exist.
pub fn parse_face_str(text: &str) -> Result<FaceFrameTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(norm).collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Data("face table has no header".into()));
    }
    let find = |name: &str| headers.iter().position(|h| *h == name.to_ascii_lowercase());
    let sel: Vec<Option<usize>> = FACE_COLUMNS.iter().map(|c| find(c)).collect();
    let success = find("success");
    let conf = find("confidence");
    let frame = find("frame");
    let face_id = find("face_id");

    let mut parsed: Vec<((f64, f64), Vec<f64>, f64)> = Vec::new();
    let mut bad = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok());
        if let Some(s) = success {
            if num(s) != Some(1.0) {
                continue;
            }
        }
        let vals: Option<Vec<f64>> = sel
            .iter()
            .map(|c| match c {
                Some(i) => num(*i).filter(|v| v.is_finite()),
                None => Some(0.0),
            })
            .collect();
        let Some(vals) = vals else {
            bad += 1;
            continue;
        };
        let key = (
            frame.and_then(num).unwrap_or(0.0),
            face_id.and_then(num).unwrap_or(0.0),
        );
        parsed.push((key, vals, conf.and_then(num).unwrap_or(f64::NAN)));
    }
    if bad > 0 {
        warn!("face table: {bad} rows with non-numeric values skipped");
    }
    if frame.is_some() {
        parsed.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    }
    let rows = parsed.len();
    let columns = FACE_COLUMNS
        .iter()
        .enumerate()
        .map(|(j, name)| (*name, sel[j].map(|_| parsed.iter().map(|r| r.1[j]).collect())))
        .collect();
    let confidence = conf.map(|_| parsed.iter().map(|r| r.2).collect());
    Ok(FaceFrameTable {
        columns,
        confidence,
        rows,
    })
}

pub fn parse_face_csv(path: &Path) -> Result<FaceFrameTable> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_face_str(&String::from_utf8_lossy(&bytes))
}

fn moving_average(xs: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 || xs.len() <= 1 {
        return xs.to_vec();
    }
    let half = width / 2;
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(xs.len());
            xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// `[mean ‖ std]` over the selected columns, zero-padded to 512.
pub fn aggregate_face(table: &FaceFrameTable, cfg: &FaceConfig) -> FaceFeature {
    if table.rows == 0 {
        return FaceFeature::absent();
    }
    let n_cols = table.columns.len();
    let mut vector = vec![0.0; FACE_DIM];
    let n = table.rows as f64;
    for (j, (name, col)) in table.columns.iter().enumerate() {
        let Some(col) = col else { continue };
        let smoothed;
        let xs: &[f64] = if is_intensity(name) {
            smoothed = moving_average(col, cfg.smoothing_window);
            &smoothed
        } else {
            col
        };
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        if j < FACE_DIM {
            vector[j] = mean;
        }
        if n_cols + j < FACE_DIM {
            vector[n_cols + j] = var.sqrt();
        }
    }
    FaceFeature {
        vector,
        present: true,
    }
}

/// Descriptor for an OpenFace CSV; unreadable or empty input yields the absent descriptor.
pub fn safe_face_features(path: Option<&Path>, cfg: &FaceConfig) -> FaceFeature {
    let Some(path) = path else {
        return FaceFeature::absent();
    };
    match parse_face_csv(path) {
        Ok(t) => aggregate_face(&t, cfg),
        Err(e) => {
            warn!("face table {}: {e}; using zero descriptor", path.display());
            FaceFeature::absent()
        }
    }
}
