//! Per-user two-class verifiers: a calibrated linear SVM over selected
//! features and a two-layer LSTM over raw windows, plus model files.

pub mod lstm;
pub mod persist;
mod pipeline;
pub mod platt;
pub mod svm;

use thiserror::Error;

use crate::features::FeatureError;

pub use lstm::{train_lstm, LstmConfig, LstmModel};
pub use persist::{load_model, save_model, FORMAT_VERSION};
pub use pipeline::{train_verifier, ClassifierKind, LstmInput, Sample, Scope, TrainConfig, Verifier, VerifierModel};
pub use svm::{train_svm, SvmConfig, SvmModel};

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("solver did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),
    #[error("model file format version {found}, this build reads version {supported}")]
    VersionMismatch { found: u16, supported: u16 },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
