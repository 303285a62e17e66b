//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use common::*;
use rand::Rng;
use sevfuse::boost::objective::{grad_hess, inverse_class_frequency, softmax, weighted_ce, ClassWeights};
use sevfuse::boost::shap::{tree_shap, tree_shap_single};
use sevfuse::boost::tree::Node;
use sevfuse::boost::{fit_gbdt, TrainConfig};
use sevfuse::eval::curves::{net_benefit, threshold_grid, treat_all_net_benefit};
use sevfuse::eval::cv::{fit_model, plan_for};
use sevfuse::eval::metrics::{
    auc_ovr, basic_metrics, cohens_kappa, mcc_multiclass, per_class_f1, Confusion,
};
use sevfuse::eval::severity::{ccc, rmse};
use sevfuse::eval::{run_ablations, stratified_kfold, CvConfig, CvData, Task};
use sevfuse::fusion::{fit_scaler, read_cache, write_cache, FusedMatrix, ModalitySubset, FUSED_DIM};
use sevfuse::pipeline::{cmd_extract, cmd_train_eval, RunConfig, TaskSelection};
use sevfuse::synth::{generate, SynthSpec};
use sevfuse::Matrix;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gradient_oracle() -> Check {
    let t0 = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let k = [2, 3, 5][inst % 3];
        let margins: Vec<f64> = (0..k).map(|_| r.gen_range(-3.0..3.0)).collect();
        let label = r.gen_range(0..k);
        let w = r.gen_range(0.2..5.0);
        let p = softmax(&margins);
        let (mut g, mut h) = (vec![0.0; k], vec![0.0; k]);
        grad_hess(&p, label, w, &mut g, &mut h);
        for c in 0..k {
            let at = |d: f64| {
                let mut m = margins.clone();
                m[c] += d;
                sample_ce(&m, label, w)
            };
            // central differences, Richardson-extrapolated over steps e and e/2
            let d1 = |e: f64| (at(e) - at(-e)) / (2.0 * e);
            let d2 = |e: f64| (at(e) - 2.0 * at(0.0) + at(-e)) / (e * e);
            let e = 1e-3;
            let fd_g = (4.0 * d1(e / 2.0) - d1(e)) / 3.0;
            let fd_h = (4.0 * d2(e / 2.0) - d2(e)) / 3.0;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-8);
            worst = worst.max(rel(g[c], fd_g)).max(rel(h[c], fd_h));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(worst < 1e-5, format!("max relative error {worst:.2e}"))?;
    ensure(secs < 1.0, format!("took {secs:.3}s"))?;
    Ok(format!("100 instances, max rel err {worst:.2e}, {secs:.3}s"))
}

fn softmax_ce() -> Check {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = r.gen_range(2..8);
        let scale = [1.0, 30.0, 700.0][r.gen_range(0..3)];
        let m: Vec<f64> = (0..k).map(|_| r.gen_range(-scale..scale)).collect();
        worst = worst.max((softmax(&m).iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst <= 1e-9, format!("row sum off by {worst:.2e}"))?;
    for k in [3usize, 5] {
        let labels: Vec<usize> = (0..40).map(|i| (i * 7 + i / 3) % k).collect();
        let probs = vec![1.0 / k as f64; labels.len() * k];
        for w in [ClassWeights::uniform(k), inverse_class_frequency(&labels, k).unwrap()] {
            let ce = weighted_ce(&probs, &labels, &w);
            ensure((ce - (k as f64).ln()).abs() <= 1e-12, format!("K={k}: CE {ce} vs ln K"))?;
        }
    }
    Ok(format!("max |sum-1| {worst:.1e}; uniform CE = ln K for K=3,5"))
}

fn split_oracle() -> Check {
    let mut r = rng(103);
    for ds in 0..20 {
        let n = r.gen_range(8..=32);
        let f = r.gen_range(1..=4);
        let k = 3;
        let coarse = ds % 3 == 0;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..f)
                    .map(|_| {
                        let v: f64 = r.gen_range(-2.0..2.0);
                        if coarse { (v * 3.0).round() / 3.0 } else { v }
                    })
                    .collect()
            })
            .collect();
        let mut y: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            y.swap(i, r.gen_range(0..=i));
        }
        let lambda = r.gen_range(0.0..3.0);
        let mcw = [0.0, 0.3, 1.0][ds % 3];
        let cfg = TrainConfig {
            n_trees: 1,
            learning_rate: 0.3,
            max_depth: 1,
            min_child_weight: mcw,
            subsample: 1.0,
            colsample: 1.0,
            l2_lambda: lambda,
            early_stopping_rounds: 0,
            n_bins: 256,
            seed: ds as u64,
        };
        let w = inverse_class_frequency(&y, k).unwrap();
        let model = fit_gbdt(&Matrix::from_rows(&x), &y, &w, &cfg, 0.0).map_err(|e| e.to_string())?;
        let p = softmax(&model.base_score);
        for c in 0..k {
            let g: Vec<f64> = (0..n).map(|i| w.get(y[i]) * (p[c] - f64::from(u8::from(y[i] == c)))).collect();
            let h: Vec<f64> = (0..n).map(|i| w.get(y[i]) * p[c] * (1.0 - p[c])).collect();
            let tree = &model.trees[c][0];
            match (brute_split(&x, &g, &h, lambda, mcw), &tree.nodes[0]) {
                (None, Node::Leaf { .. }) => {}
                (Some((bf, left, _)), Node::Split { feature, threshold, .. }) => {
                    ensure(bf == *feature, format!("dataset {ds} class {c}: feature {feature} vs oracle {bf}"))?;
                    let got: Vec<bool> = x.iter().map(|row| row[*feature] < *threshold).collect();
                    ensure(got == left, format!("dataset {ds} class {c}: partition differs"))?;
                    let (gl, hl) = (0..n).filter(|&i| left[i]).fold((0.0, 0.0), |a, i| (a.0 + g[i], a.1 + h[i]));
                    let want = -gl / (hl + lambda) * cfg.learning_rate;
                    let Node::Leaf { value, .. } = tree.nodes[1] else {
                        return Err("left child is not a leaf".into());
                    };
                    ensure((value - want).abs() <= 1e-12 * want.abs().max(1.0), format!("dataset {ds}: leaf {value} vs {want}"))?;
                }
                (o, _) => return Err(format!("dataset {ds} class {c}: oracle {:?} vs tree {:?}", o.map(|v| v.0), tree.nodes[0])),
            }
        }
    }
    Ok("20 datasets x 3 classes: feature and partition identical".into())
}

fn treeshap() -> Check {
    // local accuracy on a trained ensemble
    let mut r = rng(104);
    let n = 80;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<usize> = rows.iter().map(|v| usize::from(v[0] + v[1] > 0.0) + usize::from(v[2] > 0.5)).collect();
    let cfg = TrainConfig { n_trees: 30, max_depth: 4, min_child_weight: 0.5, early_stopping_rounds: 0, ..TrainConfig::default() };
    let x = Matrix::from_rows(&rows);
    let w = inverse_class_frequency(&y, 3).unwrap();
    let mut model = fit_gbdt(&x, &y, &w, &cfg, 0.0).map_err(|e| e.to_string())?;
    model.scaler = Some(fit_scaler(&x).unwrap());
    let mut probe = rows.clone();
    probe.extend((0..20).map(|_| (0..6).map(|_| r.gen_range(-3.0..3.0)).collect::<Vec<f64>>()));
    let margins = model.margins(&Matrix::from_rows(&probe)).map_err(|e| e.to_string())?;
    let mut worst_local = 0.0f64;
    for (i, row) in probe.iter().enumerate() {
        let e = tree_shap(&model, row);
        for c in 0..3 {
            worst_local = worst_local.max((e.reconstructed_margin(c) - margins.get(i, c)).abs());
        }
    }
    ensure(worst_local <= 1e-9, format!("local accuracy error {worst_local:.2e}"))?;

    let mut worst_brute = 0.0f64;
    for t in 0..300 {
        let m = 1 + t % 3;
        let depth = 1 + t % 2;
        let tree = random_tree(&mut r, depth, m);
        let xv: Vec<f64> = (0..m).map(|_| r.gen_range(-1.5..1.5)).collect();
        let mut phi = vec![0.0; m];
        tree_shap_single(&tree, &xv, &mut phi);
        for (a, b) in phi.iter().zip(brute_shapley(&tree, &xv, m)) {
            worst_brute = worst_brute.max((a - b).abs());
        }
    }
    ensure(worst_brute < 1e-9, format!("power-set mismatch {worst_brute:.2e}"))?;
    Ok(format!("local accuracy {worst_local:.1e} on 100 rows; power-set err {worst_brute:.1e} on 300 trees"))
}

fn leakage_guards() -> Check {
    let mut r = rng(105);
    let n = 60;
    let mut m = FusedMatrix::empty();
    for i in 0..n {
        let row: Vec<f32> = (0..FUSED_DIM).map(|_| r.gen_range(-1.0f32..1.0)).collect();
        m.push(format!("{i}"), row, i % 5, i % 3, [true; 3]);
    }
    let cv = CvConfig {
        train: TrainConfig { n_trees: 5, max_depth: 3, ..TrainConfig::default() },
        ..CvConfig::default()
    };
    let cols: Vec<usize> = (0..40).collect();
    let base_plan = plan_for(&CvData::new(&m, Task::Dep), &cv).map_err(|e| e.to_string())?;
    for (f, fold) in base_plan.folds.iter().enumerate() {
        let mut pert = m.clone();
        for &i in &fold.valid {
            for v in &mut pert.x[i * FUSED_DIM..(i + 1) * FUSED_DIM] {
                *v = r.gen_range(-1e6f32..1e6);
            }
        }
        let plan = plan_for(&CvData::new(&pert, Task::Dep), &cv).map_err(|e| e.to_string())?;
        ensure(plan == base_plan, format!("fold {f}: plan changed"))?;
        let a = m.to_matrix(&cols).select_rows(&fold.train);
        let b = pert.to_matrix(&cols).select_rows(&fold.train);
        let sa = fit_scaler(&a).unwrap();
        let sb = fit_scaler(&b).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        ensure(bits(&sa.means) == bits(&sb.means) && bits(&sa.stds) == bits(&sb.stds), format!("fold {f}: scaler changed"))?;
        let ya: Vec<usize> = fold.train.iter().map(|&i| m.y_dep[i]).collect();
        let ma = fit_model(&a, &ya, 5, &cv, 42).map_err(|e| e.to_string())?;
        let mb = fit_model(&b, &ya, 5, &cv, 42).map_err(|e| e.to_string())?;
        ensure(serde_json::to_string(&ma).unwrap() == serde_json::to_string(&mb).unwrap(), format!("fold {f}: model changed"))?;
    }
    for counts in [vec![187usize, 96, 64, 43, 15], vec![85, 180, 140]] {
        let y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| vec![c; k]).collect();
        for seed in 0..25 {
            let plan = stratified_kfold(&y, 5, seed).map_err(|e| e.to_string())?;
            for fold in &plan.folds {
                for (c, &nc) in counts.iter().enumerate() {
                    let got = fold.valid.iter().filter(|&&i| y[i] == c).count() as f64;
                    let want = nc as f64 / 5.0;
                    ensure((got - want).abs() <= 1.0, format!("counts {counts:?} seed {seed}: class {c} got {got}, expected {want}"))?;
                }
            }
        }
    }
    Ok("plan, scaler and fold models bitwise unchanged; allocation within 1 for both count sets".into())
}

struct ClsFixture {
    y: Vec<usize>,
    p: Vec<usize>,
    k: usize,
}

fn cls_fixtures() -> Vec<ClsFixture> {
    let f = |y: &[usize], p: &[usize], k| ClsFixture { y: y.to_vec(), p: p.to_vec(), k };
    vec![
        f(&[0, 0, 1, 1], &[0, 1, 1, 1], 2),
        f(&[0, 1, 2, 0, 1, 2, 0, 1, 2], &[0, 2, 1, 0, 0, 2, 1, 1, 2], 3),
        f(&[0, 0, 0, 1, 1, 2, 2, 2, 2, 3], &[0, 1, 0, 1, 2, 2, 2, 3, 2, 3], 4),
        f(&[4, 3, 2, 1, 0, 4, 3, 2, 1, 0, 0, 0], &[4, 3, 2, 0, 0, 3, 3, 1, 1, 0, 2, 0], 5),
        f(&[1, 1, 0, 0, 1, 0, 1, 1], &[1, 0, 0, 1, 1, 0, 1, 0], 2),
        f(&[2, 2, 2, 1, 1, 0], &[2, 1, 2, 1, 0, 0], 3),
    ]
}

fn metrics_suite() -> Check {
    let tol = 1e-9;
    let close = |a: f64, b: f64, what: &str, i: usize| ensure((a - b).abs() <= tol, format!("{what} fixture {i}: {a} vs {b}"));
    for (i, fx) in cls_fixtures().iter().enumerate() {
        let b = basic_metrics(&fx.y, &fx.p, fx.k).map_err(|e| e.to_string())?;
        let c = Confusion::from_labels(&fx.y, &fx.p, fx.k).unwrap();
        close(b.acc, oracle_acc(&fx.y, &fx.p), "acc", i)?;
        close(b.f1_weighted, oracle_f1_weighted(&fx.y, &fx.p, fx.k), "f1w", i)?;
        let of1 = oracle_f1(&fx.y, &fx.p, fx.k);
        close(b.f1_macro, of1.iter().sum::<f64>() / fx.k as f64, "f1 macro", i)?;
        for (a, o) in per_class_f1(&c).iter().zip(&of1) {
            close(*a, *o, "per-class f1", i)?;
        }
        close(mcc_multiclass(&c), oracle_mcc(&fx.y, &fx.p, fx.k), "mcc", i)?;
        close(cohens_kappa(&c), oracle_kappa(&fx.y, &fx.p, fx.k), "kappa", i)?;
    }
    let b = basic_metrics(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
    close(b.f1_weighted, 0.7333333333333333, "stated f1w", 0)?;
    close(cohens_kappa(&Confusion { counts: vec![vec![20, 5], vec![10, 15]] }), 0.40, "stated kappa", 0)?;

    let auc_fixtures: Vec<(Vec<usize>, Vec<f64>, usize)> = vec![
        (vec![0, 1, 2, 0, 1, 2], vec![0.7, 0.2, 0.1, 0.3, 0.4, 0.3, 0.5, 0.4, 0.1, 0.2, 0.6, 0.2, 0.1, 0.3, 0.6, 0.3, 0.3, 0.4], 3),
        (vec![0, 0, 1, 1, 1], vec![0.9, 0.1, 0.4, 0.6, 0.4, 0.6, 0.2, 0.8, 0.5, 0.5], 2),
        (vec![1, 0, 1, 0, 1, 0, 0], vec![0.5, 0.5, 0.5, 0.5, 0.3, 0.7, 0.2, 0.8, 0.6, 0.4, 0.6, 0.4, 0.1, 0.9], 2),
        (vec![0, 1, 2, 3, 0, 1, 2, 3], vec![
            0.4, 0.3, 0.2, 0.1, 0.1, 0.5, 0.2, 0.2, 0.25, 0.25, 0.25, 0.25, 0.1, 0.1, 0.1, 0.7,
            0.3, 0.3, 0.3, 0.1, 0.2, 0.2, 0.4, 0.2, 0.1, 0.1, 0.7, 0.1, 0.2, 0.3, 0.1, 0.4,
        ], 4),
        (vec![2, 2, 1, 0, 0, 1], vec![0.1, 0.1, 0.8, 0.2, 0.2, 0.6, 0.3, 0.5, 0.2, 0.6, 0.3, 0.1, 0.5, 0.1, 0.4, 0.3, 0.3, 0.4], 3),
    ];
    for (i, (y, flat, k)) in auc_fixtures.iter().enumerate() {
        let p = Matrix::new(y.len(), *k, flat.clone());
        let got = auc_ovr(y, &p);
        let mut sum = 0.0;
        for c in 0..*k {
            let pos: Vec<bool> = y.iter().map(|&t| t == c).collect();
            let s: Vec<f64> = (0..y.len()).map(|r| p.get(r, c)).collect();
            let o = oracle_auc(&pos, &s);
            sum += o;
            let a = got.per_class[c].ok_or("auc undefined")?;
            ensure((a - o).abs() <= 1e-12, format!("auc fixture {i} class {c}: {a} vs {o}"))?;
        }
        let mac = got.macro_auc.ok_or("macro auc undefined")?;
        ensure((mac - sum / *k as f64).abs() <= 1e-12, format!("macro auc fixture {i}"))?;
    }

    let nb_fixtures: Vec<(Vec<bool>, Vec<f64>)> = vec![
        (vec![true, true, true, false, true, false, false, false, false, false], vec![0.9, 0.8, 0.7, 0.6, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1]),
        (vec![true, false, true, false], vec![0.55, 0.45, 0.35, 0.95]),
        (vec![false, false, false, true, true], vec![0.1, 0.3, 0.5, 0.7, 0.9]),
        (vec![true, true, false, false, true, false], vec![0.5, 0.15, 0.25, 0.85, 0.65, 0.4]),
        (vec![true, false, false, false, false, false, false, true], vec![0.2, 0.2, 0.3, 0.1, 0.6, 0.05, 0.5, 0.9]),
    ];
    for (i, (pos, s)) in nb_fixtures.iter().enumerate() {
        for pt in threshold_grid() {
            close(net_benefit(pos, s, pt), oracle_net_benefit(pos, s, pt), "net benefit", i)?;
        }
        let pi = pos.iter().filter(|&&b| b).count() as f64 / pos.len() as f64;
        let all = vec![1.0; pos.len()];
        for pt in threshold_grid() {
            let a = net_benefit(pos, &all, pt);
            let b = treat_all_net_benefit(pi, pt);
            ensure(a == b, format!("treat-all fixture {i} p_t {pt}: {a} != {b}"))?;
        }
    }
    close(net_benefit(&nb_fixtures[0].0, &nb_fixtures[0].1, 0.5), 0.2, "stated net benefit", 0)?;

    let sev: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 3.0]),
        (vec![2.0, 7.0, 12.0, 17.0, 22.0], vec![4.5, 6.0, 11.0, 18.5, 19.0]),
        (vec![10.0, 30.5, 60.5, 10.0], vec![18.2, 25.0, 50.1, 12.0]),
        (vec![1.0, 5.0, 9.0, 13.0, 2.0, 8.0], vec![3.0, 3.5, 10.0, 11.0, 4.0, 7.5]),
        (vec![0.5, 0.25, 0.75, 1.0, 0.0], vec![0.6, 0.2, 0.9, 0.8, 0.1]),
    ];
    for (i, (s, h)) in sev.iter().enumerate() {
        close(rmse(s, h).unwrap(), oracle_rmse(s, h), "rmse", i)?;
        close(ccc(s, h).unwrap(), oracle_ccc(s, h), "ccc", i)?;
    }
    close(rmse(&sev[0].0, &sev[0].1).unwrap(), 0.5, "stated rmse", 0)?;
    Ok("6 classification, 5 AUC, 5 net-benefit, 5 severity fixtures agree; treat-all exact".into())
}

fn end_to_end() -> Check {
    let t0 = Instant::now();
    let cohort = generate(&SynthSpec { n: 400, ..SynthSpec::default() }).map_err(|e| e.to_string())?;
    let subsets: Vec<ModalitySubset> = ["ALL", "TEXT", "FACE"].iter().map(|s| s.parse().unwrap()).collect();
    let data = CvData::new(&cohort.matrix, Task::Dep);
    let reps = run_ablations(&data, &subsets, &CvConfig::default()).map_err(|e| e.to_string())?;
    let (all, text, face) = (reps[0].metrics.acc, reps[1].metrics.acc, reps[2].metrics.acc);
    let secs = t0.elapsed().as_secs_f64();
    let detail = format!("ALL {all:.3}, TEXT {text:.3}, FACE {face:.3}, {secs:.0}s");
    ensure(all >= 0.90, format!("ALL below 0.90: {detail}"))?;
    ensure((text - all).abs() <= 0.05, format!("TEXT not within 0.05 of ALL: {detail}"))?;
    ensure(face <= 0.35, format!("FACE above 0.35: {detail}"))?;
    ensure(secs < 300.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        cache_dir: tmp.path().join("cache"),
        outdir: tmp.path().join("out"),
        synthetic: Some(SynthSpec { n: 150, seed: 11, ..SynthSpec::default() }),
        task: TaskSelection::Both,
        rebuild_cache: true,
        ..RunConfig::default()
    };
    let mut runs = Vec::new();
    for _ in 0..2 {
        cmd_extract(&cfg).map_err(|e| e.to_string())?;
        cmd_train_eval(&cfg).map_err(|e| e.to_string())?;
        runs.push(read_tree(&cfg.outdir));
        fs::remove_dir_all(&cfg.outdir).map_err(|e| e.to_string())?;
    }
    for task in ["DEP", "PTSD"] {
        let name = format!("{task}/oof_proba.csv");
        let a = runs[0].iter().find(|f| f.0 == name).ok_or(format!("{name} missing"))?;
        let b = runs[1].iter().find(|f| f.0 == name).ok_or(format!("{name} missing"))?;
        ensure(a.1 == b.1, format!("{name} differs"))?;
    }
    ensure(runs[0] == runs[1], "some artifact differs between runs")?;
    Ok(format!("{} artifacts byte-identical, including DEP and PTSD oof_proba.csv", runs[0].len()))
}

fn cache() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(106);
    let mut m = FusedMatrix::empty();
    for i in 0..5 {
        let row: Vec<f32> = (0..FUSED_DIM).map(|_| f32::from_bits(r.gen_range(0u32..0x7f00_0000)) * if r.gen_bool(0.5) { -1.0 } else { 1.0 }).collect();
        m.push(format!("p{i}"), row, i % 5, i % 3, [i % 2 == 0, true, i != 3]);
    }
    let dir = tmp.path().join("rt");
    write_cache(&m, &dir).map_err(|e| e.to_string())?;
    let back = read_cache(&dir).map_err(|e| e.to_string())?;
    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    ensure(bits(&back.x) == bits(&m.x) && back.ids == m.ids && back.modality_mask == m.modality_mask, "roundtrip differs")?;
    ensure(fs::metadata(dir.join("X.f32le")).unwrap().len() == 5 * 6144, "size of 5-row cache")?;

    let spec = SynthSpec { n: 100, ..SynthSpec::default() };
    let cfg = RunConfig {
        cache_dir: tmp.path().join("syn"),
        outdir: tmp.path().join("out"),
        synthetic: Some(spec.clone()),
        ..RunConfig::default()
    };
    let s1 = cmd_extract(&cfg).map_err(|e| e.to_string())?;
    let xpath = cfg.cache_dir.join("X.f32le");
    let bytes1 = fs::read(&xpath).unwrap();
    ensure(bytes1.len() == 614_400, format!("X.f32le has {} bytes", bytes1.len()))?;
    let s2 = cmd_extract(&cfg).map_err(|e| e.to_string())?;
    ensure(s1.built && !s2.built, "second extract rebuilt the cache")?;
    ensure(fs::read(&xpath).unwrap() == bytes1, "cache bytes changed on reuse")?;
    let expect = generate(&spec).unwrap().matrix;
    ensure(read_cache(&cfg.cache_dir).unwrap() == expect, "cached synthetic matrix differs from generator")?;
    Ok("bit-exact roundtrip; 100 rows = 614400 bytes; cache reused unchanged".into())
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("gradient oracle", gradient_oracle),
        ("softmax / cross-entropy", softmax_ce),
        ("split oracle", split_oracle),
        ("TreeSHAP", treeshap),
        ("leakage guards", leakage_guards),
        ("metrics oracle suite", metrics_suite),
        ("end-to-end synthetic", end_to_end),
        ("determinism", determinism),
        ("cache", cache),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|flt| !name.contains(flt)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
