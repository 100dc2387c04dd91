//! Benchmark scorers: logistic regression and a feed-forward network on
//! flattened windows, summed instrument scores, and externally produced scores.

pub mod external;
pub mod ffnn;
pub mod flatten;
pub mod logistic;
pub mod mlp;
pub mod psychometric;

use thiserror::Error;

use crate::model::{ModelError, TrainedModel};
use crate::scalar::Scalar;
use crate::windowing::Window;

pub use external::{load_external_scores, read_external_scores};
pub use ffnn::{train_ffnn, FfnnConfig, FfnnModel};
pub use flatten::{flatten, flattened_dim, unflatten, FlatDataset, FlatParts};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use mlp::{fit_mlp, FitSettings, MlpLayout, MlpParams};
pub use psychometric::{Component, PsychometricScorer, PsychometricSpec};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no training windows")]
    EmptyTraining,
    #[error("invalid baseline configuration: {0}")]
    InvalidConfig(String),
    #[error("input dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("instrument component `{0}` is not a dynamic feature")]
    MissingComponent(String),
    #[error("external scores do not match the test windows: {0}")]
    Alignment(String),
    #[error("duplicate external score for {0}")]
    DuplicateKey(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Anything that turns test windows into one orderable score each.
pub trait Scorer<T: Scalar> {
    fn name(&self) -> &str;
    fn score(&self, windows: &[Window<T>]) -> Result<Vec<T>, BaselineError>;
}

impl<T: Scalar> Scorer<T> for TrainedModel<T> {
    fn name(&self) -> &str {
        "rnn"
    }

    fn score(&self, windows: &[Window<T>]) -> Result<Vec<T>, BaselineError> {
        Ok(self.predict(windows)?)
    }
}
