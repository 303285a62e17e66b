//! Tri-modal (audio, face, text) severity classification.
//!
//! Participant folders are scanned and labelled ([`corpus`]), each modality is reduced to a
//! fixed-length descriptor ([`audiofeat`], [`facefeat`], [`textemb`]), descriptors are
//! concatenated into a 1536-D row and cached ([`fusion`]), and per-task class-weighted
//! softmax gradient boosting ([`boost`]) is evaluated with stratified, seed-ensembled
//! cross-validation ([`eval`]). [`pipeline`] wires the stages together for the CLI.

pub mod audiofeat;
pub mod boost;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod facefeat;
pub mod fusion;
pub mod matrix;
pub mod pipeline;
pub mod synth;
pub mod textemb;

pub use error::{Error, Result};
pub use matrix::Matrix;
