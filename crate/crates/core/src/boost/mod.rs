//! Class-weighted softmax gradient boosting, TreeSHAP attribution and a logistic baseline.

pub mod binning;
pub mod gbdt;
pub mod logit;
pub mod objective;
pub mod shap;
pub mod tree;

pub use gbdt::{fit_gbdt, BoostedEnsemble, TrainConfig};
pub use logit::{fit_logit, LinearModel, LogitConfig};
pub use objective::{grad_hess, inverse_class_frequency, softmax, weighted_ce, ClassWeights};
pub use shap::{tree_shap, ShapExplanation};
pub use tree::{Node, Tree};
