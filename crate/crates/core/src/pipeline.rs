//! Extraction, cross-validation, ablation and attribution runs as used by the command line.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::audiofeat::{safe_audio_features, AudioConfig, N_MELS};
use crate::boost::shap::tree_shap;
use crate::boost::{BoostedEnsemble, TrainConfig};
use crate::corpus::{attach_labels, build_label_maps, map_dep_class, map_ptsd_class, scan_participants, Corpus, PtsdLabel};
use crate::error::{Error, Result};
use crate::eval::cv::{fit_model, plan_for};
use crate::eval::pca::pca;
use crate::eval::report::{summary_table, write_json, write_report, write_summary};
use crate::eval::{run_cv_with_plan, Algo, CvConfig, CvData, EvalReport, FittedModel, Task};
use crate::facefeat::{safe_face_features, FaceConfig, FACE_COLUMNS};
use crate::fusion::{
    cache_exists, fit_scaler, fuse, read_cache, write_cache, FusedMatrix, Modality, ModalitySubset, AUDIO_COLS,
    FACE_COLS,
};
use crate::synth::{generate, SynthSpec};
use crate::textemb::safe_text_embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSelection {
    Dep,
    Ptsd,
    Both,
}

impl TaskSelection {
    pub fn tasks(self) -> Vec<Task> {
        match self {
            TaskSelection::Dep => vec![Task::Dep],
            TaskSelection::Ptsd => vec![Task::Ptsd],
            TaskSelection::Both => vec![Task::Dep, Task::Ptsd],
        }
    }
}

impl std::str::FromStr for TaskSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dep" => Ok(TaskSelection::Dep),
            "ptsd" => Ok(TaskSelection::Ptsd),
            "both" => Ok(TaskSelection::Both),
            _ => Err(Error::Config(format!("task must be dep, ptsd or both, got {s:?}"))),
        }
    }
}

/// Fully resolved options of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub edaic_root: Option<PathBuf>,
    pub daicwoz_root: Option<PathBuf>,
    pub metadata_path: Option<PathBuf>,
    pub phq8_labels_path: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub outdir: PathBuf,
    pub folds: usize,
    pub seeds: Vec<u64>,
    pub rebuild_cache: bool,
    pub task: TaskSelection,
    /// Subsets evaluated by train-eval, or the ablation rows when non-empty.
    pub modalities: Vec<ModalitySubset>,
    pub bootstrap_reps: usize,
    pub synthetic: Option<SynthSpec>,
    pub algo: Algo,
    pub train: TrainConfig,
    /// Energy gate for audio frames, in dB below the loudest frame.
    pub vad_gate_db: Option<f64>,
    pub use_gpu: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            edaic_root: None,
            daicwoz_root: None,
            metadata_path: None,
            phq8_labels_path: None,
            cache_dir: PathBuf::from("cache_fast"),
            outdir: PathBuf::from("reports"),
            folds: 5,
            seeds: vec![42],
            rebuild_cache: false,
            task: TaskSelection::Both,
            modalities: Vec::new(),
            bootstrap_reps: 1000,
            synthetic: None,
            algo: Algo::Gbdt,
            train: TrainConfig::default(),
            vad_gate_db: None,
            use_gpu: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("--folds must be >= 2, got {}", self.folds)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("--seeds must list at least one seed".into()));
        }
        if !self.has_roots() && self.synthetic.is_none() {
            return Err(Error::Config(
                "give --edaic-root and/or --daicwoz-root, or --synthetic".into(),
            ));
        }
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        self.train.validate()
    }

    fn has_roots(&self) -> bool {
        self.edaic_root.is_some() || self.daicwoz_root.is_some()
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            seeds: self.seeds.clone(),
            algo: self.algo,
            train: self.train.clone(),
            bootstrap_reps: self.bootstrap_reps,
            ..CvConfig::default()
        }
    }

    fn eval_subsets(&self) -> Vec<ModalitySubset> {
        if self.modalities.is_empty() {
            vec![ModalitySubset::ALL]
        } else {
            self.modalities.clone()
        }
    }

    fn warn_gpu(&self) {
        if self.use_gpu {
            warn!("--use-gpu is ignored; trees are trained on the CPU");
        }
    }
}

/// Default ablation rows: ALL, each leave-one-out, then each single modality.
pub fn default_ablation_subsets() -> Vec<ModalitySubset> {
    let mut v = vec![ModalitySubset::ALL];
    for m in [Modality::Text, Modality::Audio, Modality::Face] {
        v.push(ModalitySubset::ALL.without(m));
    }
    for m in [Modality::Text, Modality::Audio, Modality::Face] {
        v.push(ModalitySubset::only(m));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractSummary {
    pub cache_dir: PathBuf,
    pub n: usize,
    pub excluded: usize,
    /// False when an existing cache was reused.
    pub built: bool,
    /// Rows with audio, face and text present.
    pub modality_counts: [usize; 3],
}

fn modality_counts(m: &FusedMatrix) -> [usize; 3] {
    let mut c = [0; 3];
    for mask in &m.modality_mask {
        for j in 0..3 {
            c[j] += usize::from(mask[j]);
        }
    }
    c
}

fn roots(cfg: &RunConfig) -> Vec<(PathBuf, Corpus)> {
    let mut r = Vec::new();
    if let Some(p) = &cfg.edaic_root {
        r.push((p.clone(), Corpus::Edaic));
    }
    if let Some(p) = &cfg.daicwoz_root {
        r.push((p.clone(), Corpus::DaicWoz));
    }
    r
}

fn featurize(cfg: &RunConfig) -> Result<(FusedMatrix, usize)> {
    if !cfg.has_roots() {
        let spec = cfg.synthetic.as_ref().expect("validated");
        info!("generating synthetic cohort: n={}, seed={}, signal={}", spec.n, spec.seed, spec.signal);
        return Ok((generate(spec)?.matrix, 0));
    }
    if cfg.synthetic.is_some() {
        warn!("data roots given; --synthetic is ignored");
    }
    let dirs = scan_participants(&roots(cfg))?;
    info!("found {} participant folders", dirs.len());
    let maps = build_label_maps(cfg.metadata_path.as_deref(), cfg.phq8_labels_path.as_deref())?;
    let (records, excluded) = attach_labels(dirs, &maps);
    if excluded > 0 {
        info!("{excluded} participants excluded for missing or invalid labels");
    }
    let acfg = AudioConfig { vad_gate_db: cfg.vad_gate_db };
    let fcfg = FaceConfig::default();
    let mut m = FusedMatrix::empty();
    for r in &records {
        let a = safe_audio_features(r.audio_path.as_deref(), &acfg);
        let f = safe_face_features(r.face_csv_path.as_deref(), &fcfg);
        let t = safe_text_embedding(r.text_embedding_path.as_deref());
        let mask = [a.present, f.present, t.present];
        debug!("participant {}: audio={} face={} text={}", r.id, mask[0], mask[1], mask[2]);
        m.push(r.id.clone(), fuse(&a, &f, &t)?, r.dep_class, r.ptsd_class, mask);
    }
    Ok((m, excluded))
}

/// Build the fused-feature cache unless one exists and no rebuild is requested.
pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    let dir = &cfg.cache_dir;
    if cache_exists(dir) && !cfg.rebuild_cache {
        let m = read_cache(dir)?;
        info!("reusing cache {} ({} rows)", dir.display(), m.n());
        return Ok(ExtractSummary {
            cache_dir: dir.clone(),
            n: m.n(),
            excluded: 0,
            built: false,
            modality_counts: modality_counts(&m),
        });
    }
    let (m, excluded) = featurize(cfg)?;
    if m.n() == 0 {
        return Err(Error::Data("no usable participants".into()));
    }
    write_cache(&m, dir)?;
    let counts = modality_counts(&m);
    info!(
        "cached {} rows to {} (audio {}, face {}, text {} present)",
        m.n(),
        dir.display(),
        counts[0],
        counts[1],
        counts[2]
    );
    Ok(ExtractSummary {
        cache_dir: dir.clone(),
        n: m.n(),
        excluded,
        built: true,
        modality_counts: counts,
    })
}

fn load_cache(cfg: &RunConfig) -> Result<FusedMatrix> {
    if !cache_exists(&cfg.cache_dir) {
        return Err(Error::Data(format!(
            "no feature cache at {}; run extract first",
            cfg.cache_dir.display()
        )));
    }
    let m = read_cache(&cfg.cache_dir)?;
    if m.n() == 0 {
        return Err(Error::Data("feature cache is empty".into()));
    }
    Ok(m)
}

/// Questionnaire totals aligned with `ids`, from metadata or the synthetic generator.
///
/// A task gets `None` unless every participant has a total.
pub fn resolve_totals(cfg: &RunConfig, ids: &[String]) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
    let (dep, ptsd): (HashMap<String, f64>, HashMap<String, f64>) = if cfg.metadata_path.is_some()
        || cfg.phq8_labels_path.is_some()
    {
        let maps = build_label_maps(cfg.metadata_path.as_deref(), cfg.phq8_labels_path.as_deref())?;
        let dep = maps
            .dep_map
            .iter()
            .filter(|(_, &v)| map_dep_class(v).is_ok())
            .map(|(k, &v)| (k.clone(), v as f64))
            .collect();
        let ptsd = maps
            .ptsd_map
            .iter()
            .filter_map(|(k, v)| match *v {
                PtsdLabel::Total(t) if map_ptsd_class(t).is_ok() => Some((k.clone(), t as f64)),
                _ => None,
            })
            .collect();
        (dep, ptsd)
    } else if let (Some(spec), false) = (&cfg.synthetic, cfg.has_roots()) {
        let c = generate(spec)?;
        let ids = &c.matrix.ids;
        (
            ids.iter().cloned().zip(c.phq8_totals.iter().map(|&v| v as f64)).collect(),
            ids.iter().cloned().zip(c.pcl_totals.iter().map(|&v| v as f64)).collect(),
        )
    } else {
        (HashMap::new(), HashMap::new())
    };
    let align = |m: &HashMap<String, f64>| ids.iter().map(|i| m.get(i).copied()).collect::<Option<Vec<f64>>>();
    Ok((align(&dep), align(&ptsd)))
}

#[derive(Debug, Clone, Serialize)]
struct BuildInfo {
    package: &'static str,
    version: &'static str,
    build_id: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    build: BuildInfo,
}

/// `run_manifest.json` in the output directory.
pub fn write_run_manifest(cfg: &RunConfig, command: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.outdir).map_err(|e| Error::io(&cfg.outdir, e))?;
    let path = cfg.outdir.join("run_manifest.json");
    let man = RunManifest {
        command,
        config: cfg,
        build: BuildInfo {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            build_id: option_env!("SEVFUSE_BUILD_ID").unwrap_or("unknown"),
        },
    };
    write_json(&man, &path)?;
    Ok(path)
}

/// Human-readable name of fused column `j`.
pub fn feature_name(j: usize) -> String {
    if AUDIO_COLS.contains(&j) {
        let stat = ["logmel_mean", "logmel_std", "delta_mean", "delta_std"][j / N_MELS];
        return format!("audio:{stat}_{}", j % N_MELS);
    }
    if FACE_COLS.contains(&j) {
        let i = j - FACE_COLS.start;
        let n = FACE_COLUMNS.len();
        return match i {
            _ if i < n => format!("face:{}_mean", FACE_COLUMNS[i]),
            _ if i < 2 * n => format!("face:{}_std", FACE_COLUMNS[i - n]),
            _ => format!("face:pad_{i}"),
        };
    }
    format!("text:emb_{}", j - crate::fusion::TEXT_COLS.start)
}

fn task_dir(cfg: &RunConfig, task: Task, subset: ModalitySubset, n_subsets: usize) -> PathBuf {
    let d = cfg.outdir.join(task.name());
    if n_subsets > 1 {
        d.join(subset.to_string())
    } else {
        d
    }
}

fn write_pca(m: &FusedMatrix, subset: ModalitySubset, task: Task, path: &Path) -> Result<()> {
    let x = m.to_matrix(&subset.columns());
    let xs = fit_scaler(&x)?.transform(&x)?;
    let p = pca(&xs, 2)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["participant_id", "label", "pc1", "pc2"])?;
    let y = task.labels(m);
    for i in 0..m.n() {
        w.write_record([
            m.ids[i].clone(),
            y[i].to_string(),
            p.scores.get(i, 0).to_string(),
            p.scores.get(i, 1).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Cross-validate every requested task and subset, write all artifacts, and fit one
/// full-data model per task for attribution.
pub fn cmd_train_eval(cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    cfg.warn_gpu();
    let m = load_cache(cfg)?;
    write_run_manifest(cfg, "train-eval")?;
    let (dep_totals, ptsd_totals) = resolve_totals(cfg, &m.ids)?;
    let cv = cfg.cv_config();
    let subsets = cfg.eval_subsets();
    let mut reports = Vec::new();
    for task in cfg.task.tasks() {
        let totals = match task {
            Task::Dep => dep_totals.as_deref(),
            Task::Ptsd => ptsd_totals.as_deref(),
        };
        let data = CvData { totals, ..CvData::new(&m, task) };
        let plan = plan_for(&data, &cv)?;
        for &subset in &subsets {
            let rep = run_cv_with_plan(&data, subset, &cv, &plan)?;
            let dir = task_dir(cfg, task, subset, subsets.len());
            write_report(&rep, &dir)?;
            write_pca(&m, subset, task, &dir.join("pca_projection.csv"))?;
            let model = fit_final_model(&m, task, subset, &cv)?;
            let model_path = dir.join("model.json");
            write_json(&model, &model_path)?;
            if let FittedModel::Gbdt(b) = &model {
                let attr = attribute(b, &m)?;
                write_attribution(&attr, &dir)?;
            }
            info!("{task} {subset}: ACC {:.3}, F1w {:.3}", rep.metrics.acc, rep.metrics.f1_weighted);
            reports.push(rep);
        }
    }
    let refs: Vec<&EvalReport> = reports.iter().collect();
    write_summary(&refs, &cfg.outdir.join("summary.csv"))?;
    let table = summary_table(&refs);
    let p = cfg.outdir.join("summary.txt");
    fs::write(&p, &table).map_err(|e| Error::io(&p, e))?;
    Ok(reports)
}

/// Model on all rows with the smallest seed, remembering its fused columns.
pub fn fit_final_model(m: &FusedMatrix, task: Task, subset: ModalitySubset, cv: &CvConfig) -> Result<FittedModel> {
    let cols = subset.columns();
    let x = m.to_matrix(&cols);
    let mut model = fit_model(&x, task.labels(m), task.n_classes(), cv, cv.fold_seed())?;
    if let FittedModel::Gbdt(b) = &mut model {
        b.columns = Some(cols);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub task: Task,
    pub subset: String,
    pub acc: f64,
    pub f1_weighted: f64,
}

/// One row per requested subset and task, all under the task's shared fold plan.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    cfg.warn_gpu();
    let m = load_cache(cfg)?;
    write_run_manifest(cfg, "ablate")?;
    let subsets = if cfg.modalities.is_empty() {
        default_ablation_subsets()
    } else {
        cfg.modalities.clone()
    };
    let cv = CvConfig { bootstrap_reps: 0, ..cfg.cv_config() };
    let mut rows = Vec::new();
    for task in cfg.task.tasks() {
        let data = CvData::new(&m, task);
        let plan = plan_for(&data, &cv)?;
        for &s in &subsets {
            let r = run_cv_with_plan(&data, s, &cv, &plan)?;
            info!("ablation {task} {s}: ACC {:.3}, F1w {:.3}", r.metrics.acc, r.metrics.f1_weighted);
            rows.push(AblationRow {
                task,
                subset: s.to_string(),
                acc: r.metrics.acc,
                f1_weighted: r.metrics.f1_weighted,
            });
        }
    }
    let path = cfg.outdir.join("ablations.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["task", "modalities", "ACC", "F1w"])?;
    for r in &rows {
        w.write_record([r.task.to_string(), r.subset.clone(), r.acc.to_string(), r.f1_weighted.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Mean |SHAP| over a cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribution {
    /// Fused column of each model feature.
    pub columns: Vec<usize>,
    /// `per_class[k][f]`: mean |φ| of model feature `f` for class `k`.
    pub per_class: Vec<Vec<f64>>,
    /// Sum over classes.
    pub total: Vec<f64>,
}

impl Attribution {
    /// Total attribution per modality, in audio, face, text order.
    pub fn modality_totals(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (f, &c) in self.columns.iter().enumerate() {
            let slot = match Modality::of_column(c) {
                Some(Modality::Audio) => 0,
                Some(Modality::Face) => 1,
                _ => 2,
            };
            out[slot] += self.total[f];
        }
        out
    }

    /// Model features ranked by total attribution, largest first, ties by column.
    pub fn top(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.total.len()).collect();
        idx.sort_by(|&a, &b| self.total[b].total_cmp(&self.total[a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }
}

/// Per-class mean |SHAP| of `model` over every cached row.
pub fn attribute(model: &BoostedEnsemble, m: &FusedMatrix) -> Result<Attribution> {
    let columns = model
        .columns
        .clone()
        .unwrap_or_else(|| (0..model.n_features).collect());
    if columns.len() != model.n_features {
        return Err(Error::Domain("model column map does not match its feature count".into()));
    }
    let x = m.to_matrix(&columns);
    let k = model.n_classes;
    let mut per_class = vec![vec![0.0; columns.len()]; k];
    for i in 0..x.rows() {
        let e = tree_shap(model, x.row(i));
        for c in 0..k {
            for (acc, v) in per_class[c].iter_mut().zip(&e.phi[c]) {
                *acc += v.abs();
            }
        }
    }
    let n = x.rows().max(1) as f64;
    per_class.iter_mut().flatten().for_each(|v| *v /= n);
    let total = (0..columns.len()).map(|f| per_class.iter().map(|r| r[f]).sum()).collect();
    Ok(Attribution { columns, per_class, total })
}

pub const TOP_FEATURES: usize = 20;

/// `shap_top_features.csv` and `shap_modality.csv` in `dir`.
pub fn write_attribution(a: &Attribution, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("shap_top_features.csv");
    let mut w = csv::Writer::from_path(&p)?;
    let mut header = vec!["rank".to_string(), "column".into(), "modality".into(), "feature".into(), "mean_abs_shap".into()];
    header.extend((0..a.per_class.len()).map(|c| format!("class{c}")));
    w.write_record(&header)?;
    for (rank, &f) in a.top(TOP_FEATURES).iter().enumerate() {
        let col = a.columns[f];
        let mut rec = vec![
            (rank + 1).to_string(),
            col.to_string(),
            Modality::of_column(col).map_or("?", Modality::name).to_string(),
            feature_name(col),
            a.total[f].to_string(),
        ];
        rec.extend(a.per_class.iter().map(|r| r[f].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    let p = dir.join("shap_modality.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["modality", "mean_abs_shap", "share"])?;
    let totals = a.modality_totals();
    let sum: f64 = totals.iter().sum();
    for (m, t) in Modality::ALL.iter().zip(totals) {
        let share = if sum > 0.0 { t / sum } else { 0.0 };
        w.write_record([m.name().to_string(), t.to_string(), share.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&p, e))
}

/// Attribute a saved tree model over the cached cohort and write the attribution files.
pub fn cmd_attribute(cfg: &RunConfig, model_path: &Path) -> Result<Attribution> {
    let text = fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
    let model: FittedModel = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: not a saved model: {e}", model_path.display())))?;
    let FittedModel::Gbdt(b) = model else {
        return Err(Error::Config("attribution needs a gradient-boosted model".into()));
    };
    let m = load_cache(cfg)?;
    let a = attribute(&b, &m)?;
    write_attribution(&a, &cfg.outdir)?;
    Ok(a)
}
