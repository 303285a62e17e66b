//! Participant discovery, label maps, severity banding and transcript cleaning.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEP_CLASSES: usize = 5;
pub const PTSD_CLASSES: usize = 3;

/// Source corpus of a participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corpus {
    Edaic,
    DaicWoz,
    Synthetic,
}

/// A participant folder discovered on disk, before labels are joined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantDir {
    pub id: String,
    pub corpus: Corpus,
    pub dir: PathBuf,
    pub audio_path: Option<PathBuf>,
    pub face_csv_path: Option<PathBuf>,
    pub transcript_path: Option<PathBuf>,
    pub text_embedding_path: Option<PathBuf>,
}

/// One labelled interviewee.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantRecord {
    pub id: String,
    pub corpus: Corpus,
    pub audio_path: Option<PathBuf>,
    pub face_csv_path: Option<PathBuf>,
    pub transcript_path: Option<PathBuf>,
    pub text_embedding_path: Option<PathBuf>,
    pub phq8_total: u32,
    /// Absent when the metadata carries only a precomputed PTSD class.
    pub pcl_total: Option<u32>,
    pub dep_class: usize,
    pub ptsd_class: usize,
}

/// PHQ-8 total to the five-tier depression class.
pub fn map_dep_class(phq8_total: i64) -> Result<usize> {
    match phq8_total {
        0..=4 => Ok(0),
        5..=9 => Ok(1),
        10..=14 => Ok(2),
        15..=19 => Ok(3),
        20..=24 => Ok(4),
        other => Err(Error::Domain(format!("PHQ-8 total {other} outside 0..=24"))),
    }
}

/// PCL total (0–80) to the three-tier PTSD class.
pub fn map_ptsd_class(pcl_total: i64) -> Result<usize> {
    match pcl_total {
        0..=20 => Ok(0),
        21..=40 => Ok(1),
        41..=80 => Ok(2),
        other => Err(Error::Domain(format!("PCL total {other} outside 0..=80"))),
    }
}

fn lower_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().to_lowercase())
        .unwrap_or_default()
}

fn has_ext(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .map(|e| {
            let e = e.to_string_lossy().to_lowercase();
            exts.iter().any(|x| *x == e)
        })
        .unwrap_or(false)
}

/// Files in `dir` and one level of subdirectories, sorted.
fn list_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            if let Ok(rd) = fs::read_dir(&path) {
                let mut sub: Vec<PathBuf> = rd
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.is_file())
                    .collect();
                sub.sort();
                out.extend(sub);
            }
        } else {
            out.push(path);
        }
    }
    Ok(out)
}

fn pick(files: &[PathBuf], pred: impl Fn(&Path, &str) -> bool) -> Option<&PathBuf> {
    files.iter().find(|p| pred(p, &lower_name(p)))
}

fn discover(id: &str, corpus: Corpus, dir: PathBuf) -> ParticipantDir {
    let mut rec = ParticipantDir {
        id: id.to_string(),
        corpus,
        dir: dir.clone(),
        audio_path: None,
        face_csv_path: None,
        transcript_path: None,
        text_embedding_path: None,
    };
    let files = match list_files(&dir) {
        Ok(f) => f,
        Err(e) => {
            warn!("participant folder {} unreadable: {e}", dir.display());
            return rec;
        }
    };
    rec.audio_path = pick(&files, |p, n| has_ext(p, &["wav"]) && n.contains("audio"))
        .or_else(|| pick(&files, |p, _| has_ext(p, &["wav"])))
        .cloned();
    rec.transcript_path = pick(&files, |p, n| {
        n.contains("transcript") && has_ext(p, &["csv", "txt", "tsv"])
    })
    .cloned();
    rec.face_csv_path = pick(&files, |p, n| n.contains("openface") && has_ext(p, &["csv", "txt"]))
        .or_else(|| pick(&files, |p, n| n.contains("_aus") && has_ext(p, &["csv", "txt"])))
        .cloned();
    let emb_name = format!("{}.emb.f32le", id.to_lowercase());
    rec.text_embedding_path = pick(&files, |_, n| n == emb_name).cloned();
    if rec.audio_path.is_none() && rec.face_csv_path.is_none() && rec.transcript_path.is_none() {
        warn!("participant folder {} has no recognised modality files", dir.display());
    }
    rec
}

/// Participant folders (names ending in `_P`) directly under `root`, sorted by id.
pub fn scan_root(root: &Path, corpus: Corpus) -> Result<Vec<ParticipantDir>> {
    let rd = fs::read_dir(root)
        .map_err(|e| Error::Config(format!("cannot read root {}: {e}", root.display())))?;
    let mut found = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_P") {
            if !id.is_empty() {
                found.push((id.to_string(), path));
            }
        }
    }
    found.sort();
    Ok(found
        .into_iter()
        .map(|(id, dir)| discover(&id, corpus, dir))
        .collect())
}

/// Scan every root and merge in lexicographic id order.
///
/// When an id appears under several roots the earliest root wins.
pub fn scan_participants(roots: &[(PathBuf, Corpus)]) -> Result<Vec<ParticipantDir>> {
    let mut merged: BTreeMap<String, ParticipantDir> = BTreeMap::new();
    for (root, corpus) in roots {
        for rec in scan_root(root, *corpus)? {
            if merged.contains_key(&rec.id) {
                warn!("duplicate participant id {} under {}; keeping first", rec.id, root.display());
                continue;
            }
            merged.insert(rec.id.clone(), rec);
        }
    }
    Ok(merged.into_values().collect())
}

/// PTSD label as found in metadata. Negative values mark a missing label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtsdLabel {
    Total(i64),
    Class(i64),
}

impl PtsdLabel {
    pub fn is_missing(&self) -> bool {
        match *self {
            PtsdLabel::Total(v) | PtsdLabel::Class(v) => v < 0,
        }
    }
}

/// id → raw score maps; −1 is the missing sentinel.
#[derive(Debug, Clone, Default)]
pub struct LabelMaps {
    pub dep_map: HashMap<String, i64>,
    pub ptsd_map: HashMap<String, PtsdLabel>,
}

pub const MISSING: i64 = -1;

fn norm_header(h: &str) -> String {
    h.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_lowercase()
}

fn sniff_delimiter(first_line: &str) -> u8 {
    [b'\t', b',', b';']
        .into_iter()
        .max_by_key(|d| first_line.bytes().filter(|b| b == d).count())
        .unwrap_or(b',')
}

fn parse_score(field: &str) -> i64 {
    let t = field.trim();
    if let Ok(v) = t.parse::<i64>() {
        return v;
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 => v as i64,
        _ => MISSING,
    }
}

struct LabelTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_label_table(path: &Path) -> Result<LabelTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(first))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.iter().map(norm_header).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(LabelTable { headers, rows })
}

fn find_col(headers: &[String], pred: impl Fn(&str) -> bool) -> Option<usize> {
    headers.iter().position(|h| pred(h))
}

fn id_col(t: &LabelTable, path: &Path) -> Result<usize> {
    find_col(&t.headers, |h| matches!(h, "participantid" | "participant" | "id" | "pid"))
        .ok_or_else(|| Error::Data(format!("{}: no Participant_ID column", path.display())))
}

fn phq_col(headers: &[String]) -> Option<usize> {
    find_col(headers, |h| {
        matches!(h, "phq8total" | "phq8score" | "phqscore" | "phq8" | "phqtotal")
    })
}

fn normalize_id(raw: &str) -> String {
    let t = raw.trim();
    match t.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v >= 0.0 => format!("{}", v as i64),
        _ => t.to_string(),
    }
}

/// Build label maps from the metadata table and an optional dedicated PHQ-8 table.
///
/// The PHQ-8 table, when given, takes precedence for depression scores. PTSD labels come
/// from the metadata: a PCL total column if present, otherwise a precomputed severity class.
pub fn build_label_maps(metadata: Option<&Path>, phq8_labels: Option<&Path>) -> Result<LabelMaps> {
    let mut maps = LabelMaps::default();
    if let Some(path) = metadata {
        let t = read_label_table(path)?;
        let idc = id_col(&t, path)?;
        let phq = phq_col(&t.headers);
        let pcl = find_col(&t.headers, |h| h.contains("pcl") && !h.contains("severity"));
        let sev = find_col(&t.headers, |h| {
            h.contains("ptsdseverity") || h == "ptsdclass" || h == "ptsdlabel"
        });
        if pcl.is_none() && sev.is_none() {
            warn!("{}: no PCL total or PTSD severity column", path.display());
        }
        for row in &t.rows {
            let Some(raw_id) = row.get(idc) else { continue };
            let id = normalize_id(raw_id);
            if let Some(c) = phq {
                let v = row.get(c).map(|s| parse_score(s)).unwrap_or(MISSING);
                maps.dep_map.insert(id.clone(), v);
            }
            let label = match (pcl, sev) {
                (Some(c), _) => Some(PtsdLabel::Total(
                    row.get(c).map(|s| parse_score(s)).unwrap_or(MISSING),
                )),
                (None, Some(c)) => Some(PtsdLabel::Class(
                    row.get(c).map(|s| parse_score(s)).unwrap_or(MISSING),
                )),
                _ => None,
            };
            if let Some(l) = label {
                maps.ptsd_map.insert(id, l);
            }
        }
    }
    if let Some(path) = phq8_labels {
        let t = read_label_table(path)?;
        let idc = id_col(&t, path)?;
        let phq = phq_col(&t.headers)
            .ok_or_else(|| Error::Data(format!("{}: no PHQ_8Total column", path.display())))?;
        for row in &t.rows {
            let Some(raw_id) = row.get(idc) else { continue };
            let v = row.get(phq).map(|s| parse_score(s)).unwrap_or(MISSING);
            maps.dep_map.insert(normalize_id(raw_id), v);
        }
    }
    Ok(maps)
}

/// Join labels onto scanned folders, dropping participants with a missing or invalid label.
///
/// Returns the records and the number of excluded participants.
pub fn attach_labels(dirs: Vec<ParticipantDir>, maps: &LabelMaps) -> (Vec<ParticipantRecord>, usize) {
    let mut out = Vec::with_capacity(dirs.len());
    let mut excluded = 0;
    for d in dirs {
        let dep = maps.dep_map.get(&d.id).copied().unwrap_or(MISSING);
        let ptsd = maps.ptsd_map.get(&d.id).copied().unwrap_or(PtsdLabel::Total(MISSING));
        if dep < 0 || ptsd.is_missing() {
            excluded += 1;
            continue;
        }
        let dep_class = match map_dep_class(dep) {
            Ok(c) => c,
            Err(e) => {
                warn!("participant {}: {e}; excluded", d.id);
                excluded += 1;
                continue;
            }
        };
        let (pcl_total, ptsd_class) = match ptsd {
            PtsdLabel::Total(t) => match map_ptsd_class(t) {
                Ok(c) => (Some(t as u32), c),
                Err(e) => {
                    warn!("participant {}: {e}; excluded", d.id);
                    excluded += 1;
                    continue;
                }
            },
            PtsdLabel::Class(c) if (c as usize) < PTSD_CLASSES => (None, c as usize),
            PtsdLabel::Class(c) => {
                warn!("participant {}: PTSD class {c} out of range; excluded", d.id);
                excluded += 1;
                continue;
            }
        };
        out.push(ParticipantRecord {
            id: d.id,
            corpus: d.corpus,
            audio_path: d.audio_path,
            face_csv_path: d.face_csv_path,
            transcript_path: d.transcript_path,
            text_embedding_path: d.text_embedding_path,
            phq8_total: dep as u32,
            pcl_total,
            dep_class,
            ptsd_class,
        });
    }
    (out, excluded)
}

fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else if ch.is_ascii_alphanumeric() {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch.to_ascii_lowercase());
        }
    }
    out
}

fn is_patient_speaker(s: &str) -> bool {
    matches!(s.trim().to_lowercase().as_str(), "participant" | "patient" | "p")
}

/// Patient-only, lowercased, punctuation-free text of a transcript.
///
/// Speaker-tagged layouts (a `speaker` column) keep only participant turns. A layout with a
/// `text` column but no speaker column is already participant-only. Anything else is
/// treated as plain patient speech.
pub fn clean_transcript(raw: &str) -> String {
    let first = raw.lines().next().unwrap_or("");
    let delim = sniff_delimiter(first);
    let header: Vec<String> = first.split(delim as char).map(norm_header).collect();
    let speaker = header.iter().position(|h| h == "speaker");
    let value = header
        .iter()
        .position(|h| h == "value" || h == "text" || h == "utterance");
    let turns: Vec<String> = match (speaker, value) {
        (Some(s), Some(v)) => tagged_turns(raw, delim, |row| {
            row.get(s).map(is_patient_speaker).unwrap_or(false)
        }, v),
        (None, Some(v)) if delim != b' ' && header.len() > 1 => tagged_turns(raw, delim, |_| true, v),
        _ => {
            warn!("transcript layout not recognised; treating whole text as patient speech");
            vec![raw.to_string()]
        }
    };
    let mut out = String::new();
    for t in turns {
        let n = normalize_text(&t);
        if n.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&n);
    }
    out
}

fn tagged_turns(raw: &str, delim: u8, keep: impl Fn(&csv::StringRecord) -> bool, value: usize) -> Vec<String> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .flexible(true)
        .quoting(delim != b'\t')
        .from_reader(raw.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records().flatten() {
        if keep(&rec) {
            if let Some(v) = rec.get(value) {
                out.push(v.to_string());
            }
        }
    }
    out
}

/// Read and clean a transcript file. Unreadable files yield `None`.
pub fn read_transcript_text(path: &Path) -> Option<String> {
    match fs::read(path) {
        Ok(bytes) => Some(clean_transcript(&String::from_utf8_lossy(&bytes))),
        Err(e) => {
            warn!("transcript {} unreadable: {e}", path.display());
            None
        }
    }
}
