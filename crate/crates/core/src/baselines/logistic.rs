//! Logistic regression on flattened windows.

use serde::{Deserialize, Serialize};

use super::flatten::FlatDataset;
use super::mlp::{fit_mlp, FitSettings, MlpLayout, MlpParams};
use super::{BaselineError, Scorer};
use crate::model::LossWeighting;
use crate::scalar::Scalar;
use crate::windowing::Window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
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
    #[serde(default = "default_weighting")]
    pub loss_weighting: LossWeighting,
}

fn default_l2() -> f64 {
    1e-4
}
fn default_epochs() -> usize {
    30
}
fn default_lr() -> f64 {
    1e-2
}
fn default_batch() -> usize {
    512
}
fn default_weighting() -> LossWeighting {
    LossWeighting::Unweighted
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2_lambda: default_l2(),
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            seed: 0,
            loss_weighting: default_weighting(),
        }
    }
}

impl LogisticConfig {
    pub(crate) fn settings(&self) -> FitSettings {
        FitSettings {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            l2_lambda: self.l2_lambda,
            dropout_rate: 0.0,
            loss_weighting: self.loss_weighting,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LogisticModel<T> {
    pub config: LogisticConfig,
    pub window_len: usize,
    pub params: MlpParams<T>,
}

pub fn train_logistic<T: Scalar>(
    windows: &[Window<T>],
    config: &LogisticConfig,
) -> Result<LogisticModel<T>, BaselineError> {
    let data = FlatDataset::from_windows(windows).ok_or(BaselineError::EmptyTraining)?;
    let layout = MlpLayout::new(data.dim, &[])?;
    let (params, _) = fit_mlp(layout, &data, &config.settings())?;
    Ok(LogisticModel {
        config: config.clone(),
        window_len: windows[0].len(),
        params,
    })
}

impl<T: Scalar> LogisticModel<T> {
    pub fn coefficients(&self) -> &[T] {
        &self.params.values[self.params.layout.weights(0)]
    }

    pub fn intercept(&self) -> T {
        self.params.values[self.params.layout.bias(0).start]
    }
}

impl<T: Scalar> Scorer<T> for LogisticModel<T> {
    fn name(&self) -> &str {
        "logistic"
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
