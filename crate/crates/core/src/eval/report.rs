//! CSV and JSON artifacts of an evaluation.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::cv::EvalReport;
use super::curves::CurvePoint;
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(Error::from)
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn write_oof_proba(rep: &EvalReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["participant_id".to_string(), "y_true".into(), "y_pred".into()];
    header.extend((0..rep.k).map(|c| format!("p{c}")));
    w.write_record(&header)?;
    for i in 0..rep.n {
        let mut rec = vec![rep.ids[i].clone(), rep.y[i].to_string(), rep.oof_pred[i].to_string()];
        rec.extend(rep.oof_proba.row(i).iter().map(|&v| f(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_curves(curves: &[Vec<CurvePoint>], names: [&str; 2], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["class", "threshold", names[0], names[1]])?;
    for (c, pts) in curves.iter().enumerate() {
        for p in pts {
            w.write_record([c.to_string(), f(p.threshold), f(p.x), f(p.y)])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Everything except attributions and projections into `dir`.
pub fn write_report(rep: &EvalReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_oof_proba(rep, &dir.join("oof_proba.csv"))?;

    let p = dir.join("confusion.csv");
    let mut w = writer(&p)?;
    let mut header = vec!["true\\pred".to_string()];
    header.extend((0..rep.k).map(|c| c.to_string()));
    w.write_record(&header)?;
    for (t, row) in rep.confusion.counts.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    let p = dir.join("per_class_f1.csv");
    let mut w = writer(&p)?;
    w.write_record(["class", "support", "f1", "auc_ovr"])?;
    let sup = rep.confusion.support();
    for c in 0..rep.k {
        let auc = rep.per_class_auc[c].map(f).unwrap_or_default();
        w.write_record([c.to_string(), sup[c].to_string(), f(rep.per_class_f1[c]), auc])?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    write_curves(&rep.roc, ["fpr", "tpr"], &dir.join("roc_points.csv"))?;
    write_curves(&rep.pr, ["recall", "precision"], &dir.join("pr_points.csv"))?;

    let p = dir.join("net_benefit.csv");
    let mut w = writer(&p)?;
    w.write_record(["class", "threshold", "model", "treat_all", "treat_none"])?;
    for r in &rep.net_benefit {
        w.write_record([r.class.to_string(), f(r.threshold), f(r.model), f(r.treat_all), f(r.treat_none)])?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    write_json(rep, &dir.join("report.json"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

/// Columns of the cross-validated summary table.
pub const SUMMARY_COLUMNS: [&str; 9] = ["ACC", "ACC_lo", "ACC_hi", "F1w", "F1w_lo", "F1w_hi", "AUC", "MCC", "kappa"];

pub fn summary_values(rep: &EvalReport) -> [f64; 9] {
    let ci = |name: &str| rep.ci.get(name).map_or((f64::NAN, f64::NAN), |c| (c.lo, c.hi));
    let (alo, ahi) = ci("acc");
    let (flo, fhi) = ci("f1_weighted");
    let m = &rep.metrics;
    [m.acc, alo, ahi, m.f1_weighted, flo, fhi, m.auc_macro_ovr, m.mcc, m.kappa]
}

/// One row per report, keyed by task and modality subset.
pub fn write_summary(reports: &[&EvalReport], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["task", "modalities", "algo"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in reports {
        let mut rec = vec![r.task.to_string(), r.subset.clone(), r.algo.to_string()];
        rec.extend(summary_values(r).iter().map(|v| format!("{v:.4}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fixed-width text rendering of [`write_summary`].
pub fn summary_table(reports: &[&EvalReport]) -> String {
    let mut out = format!("{:<5} {:<11} {:<6}", "task", "modalities", "algo");
    for c in SUMMARY_COLUMNS {
        out.push_str(&format!(" {c:>7}"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<5} {:<11} {:<6}", r.task.to_string(), r.subset, r.algo.to_string()));
        for v in summary_values(r) {
            out.push_str(&format!(" {v:>7.3}"));
        }
        out.push('\n');
    }
    out
}
