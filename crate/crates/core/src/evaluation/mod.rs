//! Scoring of forecasts on the held-out windows: PRG curves, ROC area,
//! patient-stratified block bootstrap and the ranked comparison table.

pub mod bootstrap;
pub mod ks;
pub mod prg;
pub mod report;
pub mod roc;
pub mod testset;

use thiserror::Error;

pub use bootstrap::{
    block_bootstrap, paired_p_value, percentile_interval, resample_indices, BootstrapConfig,
    BootstrapReport, ModelBootstrap, PairwiseTest,
};
pub use ks::{kolmogorov_survival, ks_normal, KsResult};
pub use prg::{auc_prg, auc_prg_of, prg_curve, threshold_counts, Confusion, PrgCurve, PrgPoint};
pub use report::{
    comparison_table, write_prg_points, write_resamples, ComparisonRow, ComparisonTable,
};
pub use roc::roc_auc;
pub use testset::{ModelScores, ScoredTestSet, TestKey};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("labels are degenerate ({positives} positives, {negatives} negatives)")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("score at position {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("duplicate test key {0}")]
    DuplicateKey(String),
    #[error("test key {0} is not in the test set")]
    UnknownKey(String),
    #[error("no score supplied for test key {0}")]
    MissingKey(String),
    #[error("label mismatch for {patient_id} at day {label_index}")]
    LabelMismatch {
        patient_id: String,
        label_index: usize,
    },
    #[error("model {0} already present")]
    DuplicateModel(String),
    #[error("no models to evaluate")]
    NoModels,
    #[error("resample {resample} lacked a class after {attempts} draws")]
    DegenerateResample { resample: usize, attempts: usize },
    #[error("invalid bootstrap configuration: {0}")]
    InvalidConfig(String),
}
