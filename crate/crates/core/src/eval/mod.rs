//! Out-of-fold evaluation: folds, metrics, intervals, decision curves, severity agreement.

pub mod bootstrap;
pub mod curves;
pub mod cv;
pub mod folds;
pub mod metrics;
pub mod pca;
pub mod report;
pub mod severity;

pub use cv::{run_ablations, run_cv, run_cv_with_plan, Algo, CvConfig, CvData, EvalReport, FittedModel, Task};
pub use folds::{stratified_kfold, Fold, FoldPlan};
pub use severity::SeverityAnchors;
