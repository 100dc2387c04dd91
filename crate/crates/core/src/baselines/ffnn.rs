//! Feed-forward network with one or two tanh hidden layers on flattened
//! windows.

use serde::{Deserialize, Serialize};

use super::flatten::FlatDataset;
use super::mlp::{fit_mlp, FitSettings, MlpLayout, MlpParams};
use super::{BaselineError, Scorer};
use crate::model::LossWeighting;
use crate::scalar::Scalar;
use crate::windowing::Window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfnnConfig {
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default = "default_l2")]
    pub l2_lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// The feed-forward baseline trains on the weighted loss by default.
    #[serde(default)]
    pub loss_weighting: LossWeighting,
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}
fn default_dropout() -> f64 {
    0.2
}
fn default_l2() -> f64 {
    1e-4
}
fn default_epochs() -> usize {
    30
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    512
}

impl Default for FfnnConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: default_hidden(),
            dropout_rate: default_dropout(),
            l2_lambda: default_l2(),
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            seed: 0,
            loss_weighting: LossWeighting::InverseFrequency,
        }
    }
}

impl FfnnConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(1..=2).contains(&self.hidden_sizes.len()) {
            return Err(BaselineError::InvalidConfig(format!(
                "the feed-forward baseline needs one or two hidden layers, got {}",
                self.hidden_sizes.len()
            )));
        }
        self.settings().validate()
    }

    pub(crate) fn settings(&self) -> FitSettings {
        FitSettings {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            l2_lambda: self.l2_lambda,
            dropout_rate: self.dropout_rate,
            loss_weighting: self.loss_weighting,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FfnnModel<T> {
    pub config: FfnnConfig,
    pub window_len: usize,
    pub params: MlpParams<T>,
}

pub fn train_ffnn<T: Scalar>(
    windows: &[Window<T>],
    config: &FfnnConfig,
) -> Result<FfnnModel<T>, BaselineError> {
    config.validate()?;
    let data = FlatDataset::from_windows(windows).ok_or(BaselineError::EmptyTraining)?;
    let layout = MlpLayout::new(data.dim, &config.hidden_sizes)?;
    let (params, _) = fit_mlp(layout, &data, &config.settings())?;
    Ok(FfnnModel {
        config: config.clone(),
        window_len: windows[0].len(),
        params,
    })
}

impl<T: Scalar> Scorer<T> for FfnnModel<T> {
    fn name(&self) -> &str {
        "ffnn"
    }

    fn score(&self, windows: &[Window<T>]) -> Result<Vec<T>, BaselineError> {
        if windows.is_empty() {
            return Ok(Vec::new());
        }
        let data = FlatDataset::from_windows(windows).ok_or(BaselineError::DimensionMismatch {
            expected: self.params.layout.input_dim(),
            found: 0,
        })?;
        self.params.predict(&data)
    }
}
