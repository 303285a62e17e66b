//! Seed-ensembled stratified cross-validation and modality ablations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, BootstrapCi};
use super::curves::{net_benefit, pr_points, roc_points, threshold_grid, treat_all_net_benefit, CurvePoint, NetBenefitRow};
use super::folds::{stratified_kfold, FoldPlan};
use super::metrics::{
    argmax_rows, auc_ovr, basic_from_confusion, kappa_checked, mcc_checked, metric_set, per_class_f1, Confusion,
    MetricSet,
};
use super::severity::{ccc, expected_severity, rmse, SeverityAnchors};
use crate::boost::{fit_gbdt, fit_logit, inverse_class_frequency, BoostedEnsemble, LinearModel, LogitConfig, TrainConfig};
use crate::corpus::{DEP_CLASSES, PTSD_CLASSES};
use crate::error::{Error, Result};
use crate::fusion::{fit_scaler, FusedMatrix, ModalitySubset};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Dep,
    Ptsd,
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::Dep => DEP_CLASSES,
            Task::Ptsd => PTSD_CLASSES,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Dep => "DEP",
            Task::Ptsd => "PTSD",
        }
    }

    pub fn labels(self, m: &FusedMatrix) -> &[usize] {
        match self {
            Task::Dep => &m.y_dep,
            Task::Ptsd => &m.y_ptsd,
        }
    }

    pub fn default_anchors(self) -> SeverityAnchors {
        match self {
            Task::Dep => SeverityAnchors::phq8(),
            Task::Ptsd => SeverityAnchors::pcl(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dep" | "depression" => Ok(Task::Dep),
            "ptsd" => Ok(Task::Ptsd),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Gbdt,
    Logit,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Gbdt => "gbdt",
            Algo::Logit => "logit",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gbdt" => Ok(Algo::Gbdt),
            "logit" | "lr" => Ok(Algo::Logit),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seeds: Vec<u64>,
    pub algo: Algo,
    pub train: TrainConfig,
    pub logit: LogitConfig,
    /// Share of each training fold held out for early stopping.
    pub holdout_fraction: f64,
    pub bootstrap_reps: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seeds: vec![42],
            algo: Algo::Gbdt,
            train: TrainConfig::default(),
            logit: LogitConfig::default(),
            holdout_fraction: 0.1,
            bootstrap_reps: 1000,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout fraction must lie in [0, 1)".into()));
        }
        self.train.validate()
    }

    pub fn sorted_seeds(&self) -> Vec<u64> {
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Seed of the fold plan and the bootstrap: the smallest ensemble seed.
    pub fn fold_seed(&self) -> u64 {
        self.seeds.iter().copied().min().unwrap_or(0)
    }
}

/// A trained model that carries its own scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum FittedModel {
    Gbdt(BoostedEnsemble),
    Logit(LinearModel),
}

impl FittedModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FittedModel::Gbdt(m) => m.predict_proba(x),
            FittedModel::Logit(m) => m.predict_proba(x),
        }
    }

    /// Boosting rounds kept, or solver iterations.
    pub fn size(&self) -> usize {
        match self {
            FittedModel::Gbdt(m) => m.n_rounds(),
            FittedModel::Logit(m) => m.iterations,
        }
    }
}

/// Standardise on `x`, then fit one model of `cfg.algo` with `seed`.
pub fn fit_model(x: &Matrix, y: &[usize], k: usize, cfg: &CvConfig, seed: u64) -> Result<FittedModel> {
    let scaler = fit_scaler(x)?;
    let xs = scaler.transform(x)?;
    let w = inverse_class_frequency(y, k)?;
    Ok(match cfg.algo {
        Algo::Gbdt => {
            let mut m = fit_gbdt(&xs, y, &w, &cfg.train.with_seed(seed), cfg.holdout_fraction)?;
            m.scaler = Some(scaler);
            FittedModel::Gbdt(m)
        }
        Algo::Logit => {
            let mut m = fit_logit(&xs, y, &w, &cfg.logit)?;
            m.scaler = Some(scaler);
            FittedModel::Logit(m)
        }
    })
}

/// Arithmetic mean of one model per sorted seed.
pub fn fit_predict_ensemble(
    x_train: &Matrix,
    y_train: &[usize],
    x_eval: &Matrix,
    k: usize,
    cfg: &CvConfig,
) -> Result<(Matrix, Vec<(u64, usize)>)> {
    let seeds = cfg.sorted_seeds();
    let mut acc = Matrix::zeros(x_eval.rows(), k);
    let mut sizes = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let m = fit_model(x_train, y_train, k, cfg, seed).map_err(|e| Error::Fit(format!("seed {seed}: {e}")))?;
        let p = m.predict_proba(x_eval)?;
        for i in 0..acc.rows() {
            for (a, v) in acc.row_mut(i).iter_mut().zip(p.row(i)) {
                *a += v;
            }
        }
        sizes.push((seed, m.size()));
    }
    let s = seeds.len() as f64;
    for i in 0..acc.rows() {
        acc.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    Ok((acc, sizes))
}

/// Inputs shared by every evaluation of one task.
#[derive(Debug, Clone, Copy)]
pub struct CvData<'a> {
    pub matrix: &'a FusedMatrix,
    pub task: Task,
    /// Continuous questionnaire totals for severity agreement, if known.
    pub totals: Option<&'a [f64]>,
    pub anchors: Option<&'a SeverityAnchors>,
}

impl<'a> CvData<'a> {
    pub fn new(matrix: &'a FusedMatrix, task: Task) -> Self {
        Self { matrix, task, totals: None, anchors: None }
    }

    pub fn labels(&self) -> &'a [usize] {
        self.task.labels(self.matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_valid: usize,
    pub model_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityReport {
    pub rmse: f64,
    pub ccc: f64,
    pub anchors: Vec<f64>,
    /// `totals` or `class_anchor`.
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub subset: String,
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub fold_seed: u64,
    pub metrics: MetricSet,
    pub per_class_f1: Vec<f64>,
    pub per_class_auc: Vec<Option<f64>>,
    pub confusion: Confusion,
    pub ci: BTreeMap<String, BootstrapCi>,
    pub severity: SeverityReport,
    pub fits: Vec<FoldFit>,
    #[serde(skip)]
    pub ids: Vec<String>,
    #[serde(skip)]
    pub y: Vec<usize>,
    #[serde(skip)]
    pub oof_proba: Matrix,
    #[serde(skip)]
    pub oof_pred: Vec<usize>,
    #[serde(skip)]
    pub roc: Vec<Vec<CurvePoint>>,
    #[serde(skip)]
    pub pr: Vec<Vec<CurvePoint>>,
    #[serde(skip)]
    pub net_benefit: Vec<NetBenefitRow>,
}

pub fn plan_for(data: &CvData<'_>, cfg: &CvConfig) -> Result<FoldPlan> {
    stratified_kfold(data.labels(), cfg.folds, cfg.fold_seed())
}

pub fn run_cv(data: &CvData<'_>, subset: ModalitySubset, cfg: &CvConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let plan = plan_for(data, cfg)?;
    run_cv_with_plan(data, subset, cfg, &plan)
}

/// Out-of-fold evaluation of `subset` columns under an existing fold plan.
pub fn run_cv_with_plan(data: &CvData<'_>, subset: ModalitySubset, cfg: &CvConfig, plan: &FoldPlan) -> Result<EvalReport> {
    cfg.validate()?;
    let m = data.matrix;
    let y = data.labels();
    let k = data.task.n_classes();
    if plan.n() != m.n() {
        return Err(Error::Domain(format!("fold plan covers {} rows, matrix has {}", plan.n(), m.n())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= k) {
        return Err(Error::Data(format!("{} label {bad} outside 0..{k}", data.task)));
    }
    let x = m.to_matrix(&subset.columns());
    let mut oof = Matrix::zeros(m.n(), k);
    let mut fits = Vec::new();
    for (f, fold) in plan.folds.iter().enumerate() {
        let xt = x.select_rows(&fold.train);
        let yt: Vec<usize> = fold.train.iter().map(|&i| y[i]).collect();
        let xv = x.select_rows(&fold.valid);
        let (p, sizes) = fit_predict_ensemble(&xt, &yt, &xv, k, cfg)
            .map_err(|e| Error::Fit(format!("{} {subset} fold {f}: {e}", data.task)))?;
        for (r, &i) in fold.valid.iter().enumerate() {
            oof.row_mut(i).copy_from_slice(p.row(r));
        }
        info!(
            "{} {subset} fold {}/{}: {} train, {} valid, model sizes {:?}",
            data.task,
            f + 1,
            plan.k(),
            fold.train.len(),
            fold.valid.len(),
            sizes.iter().map(|s| s.1).collect::<Vec<_>>()
        );
        fits.extend(sizes.into_iter().map(|(seed, model_size)| FoldFit {
            fold: f,
            seed,
            n_train: fold.train.len(),
            n_valid: fold.valid.len(),
            model_size,
        }));
    }
    let mut rep = assemble_report(data, &oof, cfg)?;
    rep.subset = subset.to_string();
    rep.fits = fits;
    Ok(rep)
}

/// Evaluate every subset under one shared fold plan, in the order given.
pub fn run_ablations(data: &CvData<'_>, subsets: &[ModalitySubset], cfg: &CvConfig) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let plan = plan_for(data, cfg)?;
    subsets.iter().map(|&s| run_cv_with_plan(data, s, cfg, &plan)).collect()
}

fn gather(y: &[usize], p: &Matrix, idx: &[usize]) -> (Vec<usize>, Matrix) {
    (idx.iter().map(|&i| y[i]).collect(), p.select_rows(idx))
}

fn replicate_metric(name: &str, y: &[usize], p: &Matrix) -> Option<f64> {
    let k = p.cols();
    let pred = argmax_rows(p);
    let c = Confusion::from_labels(y, &pred, k).ok()?;
    let b = basic_from_confusion(&c).ok()?;
    match name {
        "acc" => Some(b.acc),
        "f1_weighted" => Some(b.f1_weighted),
        "f1_macro" => Some(b.f1_macro),
        "recall_macro" => Some(b.recall_macro),
        "mcc" => mcc_checked(&c),
        "kappa" => kappa_checked(&c),
        "auc_macro_ovr" => auc_ovr(y, p).macro_auc,
        _ => None,
    }
}

/// Metrics, intervals, curves and severity agreement of an out-of-fold probability table.
pub fn assemble_report(data: &CvData<'_>, oof: &Matrix, cfg: &CvConfig) -> Result<EvalReport> {
    let y = data.labels();
    let k = oof.cols();
    let (metrics, confusion) = metric_set(y, oof)?;
    let per_class_f1 = per_class_f1(&confusion);
    let per_class_auc = auc_ovr(y, oof).per_class;
    let n = y.len();
    let mut ci = BTreeMap::new();
    if cfg.bootstrap_reps > 0 {
        for name in MetricSet::NAMES {
            if let Ok(c) = bootstrap_ci(n, cfg.bootstrap_reps, cfg.fold_seed(), |idx| {
                let (ys, ps) = gather(y, oof, idx);
                replicate_metric(name, &ys, &ps)
            }) {
                ci.insert(name.to_string(), c);
            }
        }
    }
    let mut roc = Vec::with_capacity(k);
    let mut pr = Vec::with_capacity(k);
    let mut nb = Vec::new();
    let nf = n as f64;
    for c in 0..k {
        let pos: Vec<bool> = y.iter().map(|&t| t == c).collect();
        let s: Vec<f64> = (0..n).map(|i| oof.get(i, c)).collect();
        roc.push(roc_points(&pos, &s));
        pr.push(pr_points(&pos, &s));
        let pi = pos.iter().filter(|&&b| b).count() as f64 / nf;
        for t in threshold_grid() {
            nb.push(NetBenefitRow {
                class: c,
                threshold: t,
                model: net_benefit(&pos, &s, t),
                treat_all: treat_all_net_benefit(pi, t),
                treat_none: 0.0,
            });
        }
    }
    let anchors = data.anchors.cloned().unwrap_or_else(|| data.task.default_anchors());
    let s_hat = expected_severity(oof, &anchors)?;
    let (targets, target) = match data.totals {
        Some(t) if t.len() == n => (t.to_vec(), "totals"),
        _ => (y.iter().map(|&c| anchors.values()[c]).collect(), "class_anchor"),
    };
    let severity = SeverityReport {
        rmse: rmse(&targets, &s_hat)?,
        ccc: if n >= 2 { ccc(&targets, &s_hat)? } else { f64::NAN },
        anchors: anchors.values().to_vec(),
        target: target.to_string(),
    };
    Ok(EvalReport {
        task: data.task,
        subset: String::new(),
        algo: cfg.algo,
        n,
        k,
        seeds: cfg.sorted_seeds(),
        fold_seed: cfg.fold_seed(),
        metrics,
        per_class_f1,
        per_class_auc,
        confusion,
        ci,
        severity,
        fits: Vec::new(),
        ids: data.matrix.ids.clone(),
        y: y.to_vec(),
        oof_pred: argmax_rows(oof),
        oof_proba: oof.clone(),
        roc,
        pr,
        net_benefit: nb,
    })
}
