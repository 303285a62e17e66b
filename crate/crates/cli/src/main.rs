use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sevfuse::boost::TrainConfig;
use sevfuse::eval::cv::Algo;
use sevfuse::eval::report::summary_table;
use sevfuse::fusion::ModalitySubset;
use sevfuse::pipeline::{cmd_ablate, cmd_attribute, cmd_extract, cmd_train_eval, RunConfig, TaskSelection};
use sevfuse::synth::SynthSpec;

#[derive(Parser)]
#[command(name = "sevfuse", version, about = "Audio, face and text severity classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the fused feature cache.
    Extract(Common),
    /// Extract if needed, then cross-validate and write reports.
    TrainEval(Common),
    /// Extract if needed, then compare modality subsets.
    Ablate(Common),
    /// Per-feature and per-modality SHAP for a saved tree model.
    Attribute {
        #[command(flatten)]
        common: Common,
        /// model.json written by train-eval.
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    edaic_root: Option<PathBuf>,
    #[arg(long)]
    daicwoz_root: Option<PathBuf>,
    /// Label table with participant ids, PHQ-8 totals and PCL totals or PTSD classes.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Optional PHQ-8 table that overrides depression scores from --metadata.
    #[arg(long)]
    phq8_labels: Option<PathBuf>,
    #[arg(long, default_value = "cache_fast")]
    cache_dir: PathBuf,
    #[arg(long, default_value = "reports")]
    outdir: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Comma-separated; predictions are averaged over seeds.
    #[arg(long, value_delimiter = ',', default_value = "42")]
    seeds: Vec<u64>,
    #[arg(long)]
    rebuild_cache: bool,
    /// dep, ptsd or both.
    #[arg(long, default_value = "both")]
    task: TaskSelection,
    /// Comma-separated subsets such as ALL, TEXT, AUDIO+FACE, ALL-TEXT.
    #[arg(long, value_delimiter = ',')]
    modalities: Vec<ModalitySubset>,
    #[arg(long, default_value_t = 1000)]
    bootstrap_reps: usize,
    /// Use a generated cohort, e.g. `--synthetic n=400,seed=7,signal=1.5`.
    #[arg(long, num_args = 0..=1, default_missing_value = "", value_name = "SPEC")]
    synthetic: Option<SynthSpec>,
    /// gbdt or logit.
    #[arg(long, default_value = "gbdt")]
    algo: Algo,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Drop audio frames this many dB below the loudest frame.
    #[arg(long)]
    vad_gate_db: Option<f64>,
    /// Accepted for compatibility; training always runs on the CPU.
    #[arg(long)]
    use_gpu: bool,
}

impl Common {
    fn into_config(self) -> RunConfig {
        let d = TrainConfig::default();
        RunConfig {
            edaic_root: self.edaic_root,
            daicwoz_root: self.daicwoz_root,
            metadata_path: self.metadata,
            phq8_labels_path: self.phq8_labels,
            cache_dir: self.cache_dir,
            outdir: self.outdir,
            folds: self.folds,
            seeds: self.seeds,
            rebuild_cache: self.rebuild_cache,
            task: self.task,
            modalities: self.modalities,
            bootstrap_reps: self.bootstrap_reps,
            synthetic: self.synthetic,
            algo: self.algo,
            train: TrainConfig {
                n_trees: self.n_trees.unwrap_or(d.n_trees),
                learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
                max_depth: self.max_depth.unwrap_or(d.max_depth),
                ..d
            },
            vad_gate_db: self.vad_gate_db,
            use_gpu: self.use_gpu,
        }
    }
}

fn run(cmd: Command) -> sevfuse::Result<()> {
    match cmd {
        Command::Extract(c) => {
            let s = cmd_extract(&c.into_config())?;
            println!(
                "{} participants in {} ({}; {} excluded; audio {}, face {}, text {})",
                s.n,
                s.cache_dir.display(),
                if s.built { "built" } else { "reused" },
                s.excluded,
                s.modality_counts[0],
                s.modality_counts[1],
                s.modality_counts[2]
            );
        }
        Command::TrainEval(c) => {
            let cfg = c.into_config();
            cmd_extract(&cfg)?;
            let reports = cmd_train_eval(&cfg)?;
            print!("{}", summary_table(&reports.iter().collect::<Vec<_>>()));
            println!("reports written to {}", cfg.outdir.display());
        }
        Command::Ablate(c) => {
            let cfg = c.into_config();
            cmd_extract(&cfg)?;
            for r in cmd_ablate(&cfg)? {
                println!("{:<5} {:<11} ACC {:.3}  F1w {:.3}", r.task, r.subset, r.acc, r.f1_weighted);
            }
        }
        Command::Attribute { common, model } => {
            let cfg = common.into_config();
            let a = cmd_attribute(&cfg, &model)?;
            let t = a.modality_totals();
            let sum: f64 = t.iter().sum();
            for (name, v) in ["audio", "face", "text"].iter().zip(t) {
                let share = if sum > 0.0 { v / sum } else { 0.0 };
                println!("{name:<6} {v:.6}  ({:.1}%)", 100.0 * share);
            }
            println!("attribution written to {}", cfg.outdir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
