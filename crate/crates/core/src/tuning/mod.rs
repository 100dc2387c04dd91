//! Hyperparameter search driven by the mean validation AUC-PRG over expanding
//! sequential folds. Trials run serially, which keeps the search deterministic
//! for a fixed seed.

pub mod families;
pub mod sampler;
pub mod search;
pub mod space;

use thiserror::Error;

use crate::evaluation::EvalError;

pub use families::{FfnnFamily, LogisticFamily, ModelFamily, RnnFamily};
pub use sampler::{sample_config, sample_random, Observation, Strategy, TpeSettings};
pub use search::{run_search, BestConfig, SearchOutcome, SearchSettings, Trial};
pub use space::{Dimension, DimensionKind, ParamSample, SearchSpace};

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid search settings: {0}")]
    InvalidSettings(String),
    #[error("unusable cross-validation folds: {0}")]
    InvalidFolds(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("every trial failed")]
    NoSuccessfulTrial,
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<crate::model::ModelError> for TuneError {
    fn from(e: crate::model::ModelError) -> Self {
        TuneError::Training(e.to_string())
    }
}

impl From<crate::baselines::BaselineError> for TuneError {
    fn from(e: crate::baselines::BaselineError) -> Self {
        TuneError::Training(e.to_string())
    }
}
