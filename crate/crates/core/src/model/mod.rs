//! The recurrent classifier: a stack of LSTM layers read many-to-one, with a
//! sigmoid output neuron, trained with class-weighted cross-entropy and Adam.

pub mod adam;
pub mod loss;
pub mod lstm;
pub mod network;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::AdamState;
pub use loss::{batch_loss, LossWeighting, LossWeights, EPS_CLIP};
pub use lstm::{lstm_cell_forward, LstmLayerRef};
pub use network::{
    batch_objective, loss_and_gradient, BatchGradient, DropoutMasks, Mode, ModelParams,
    ParamLayout, Workspace,
};
pub use train::{train, LossRecord, TrainedModel, CHECKPOINT_VERSION};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("no training windows")]
    EmptyTraining,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Diverged { epoch: usize, batch: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// Hyperparameters and training settings of the recurrent classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    #[serde(default)]
    pub dropout_rate: f64,
    #[serde(default)]
    pub l2_lambda: f64,
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss_weighting: LossWeighting,
}

fn default_batch_size() -> usize {
    512
}

fn default_learning_rate() -> f64 {
    1e-4
}

impl ModelConfig {
    /// A configuration with the default optimiser settings.
    pub fn new(input_dim: usize, hidden_size: usize, num_layers: usize, epochs: usize) -> Self {
        Self {
            input_dim,
            hidden_size,
            num_layers,
            dropout_rate: 0.0,
            l2_lambda: 0.0,
            epochs,
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            seed: 0,
            loss_weighting: LossWeighting::default(),
        }
    }

    /// Structural checks only; tuning ranges are enforced by the search space.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive".into());
        }
        if self.num_layers == 0 {
            return bad("num_layers must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad(format!(
                "l2_lambda must be non-negative, got {}",
                self.l2_lambda
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<ParamLayout, ModelError> {
        ParamLayout::new(self.input_dim, self.hidden_size, self.num_layers)
    }
}
