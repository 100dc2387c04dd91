//! Model families the search can tune. A family turns a sampled point into a
//! concrete configuration and trains it. Training only ever receives the
//! fold-train windows; validation windows are seen by the returned scorer.

use serde::Serialize;

use super::space::ParamSample;
use super::TuneError;
use crate::baselines::{train_ffnn, train_logistic, FfnnConfig, LogisticConfig, Scorer};
use crate::model::{train, ModelConfig};
use crate::scalar::Scalar;
use crate::windowing::Window;

pub trait ModelFamily<T: Scalar> {
    type Config: Clone + Serialize;

    fn name(&self) -> &str;

    fn configure(&self, sample: &ParamSample, seed: u64) -> Result<Self::Config, TuneError>;

    fn train(
        &self,
        config: &Self::Config,
        train_windows: &[Window<T>],
    ) -> Result<Box<dyn Scorer<T>>, TuneError>;
}

fn as_count(sample: &ParamSample, name: &str) -> Result<usize, TuneError> {
    let v = sample.require(name)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(TuneError::InvalidSpace(format!(
            "`{name}` must be a whole number, got {v}"
        )));
    }
    Ok(v as usize)
}

/// Tunes the recurrent classifier. Settings outside the sample (input size,
/// batch size, learning rate, loss weighting) come from `base`.
#[derive(Clone, Debug)]
pub struct RnnFamily {
    pub base: ModelConfig,
}

impl<T: Scalar> ModelFamily<T> for RnnFamily {
    type Config = ModelConfig;

    fn name(&self) -> &str {
        "rnn"
    }

    fn configure(&self, sample: &ParamSample, seed: u64) -> Result<ModelConfig, TuneError> {
        let mut cfg = self.base.clone();
        cfg.hidden_size = as_count(sample, "hidden")?;
        cfg.num_layers = as_count(sample, "layers")?;
        cfg.dropout_rate = sample.require("dropout")?;
        cfg.l2_lambda = sample.require("l2")?;
        cfg.epochs = as_count(sample, "epochs")?;
        if let Some(lr) = sample.get("learning_rate") {
            cfg.learning_rate = lr;
        }
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }

    fn train(
        &self,
        config: &ModelConfig,
        train_windows: &[Window<T>],
    ) -> Result<Box<dyn Scorer<T>>, TuneError> {
        Ok(Box::new(train(config, train_windows)?))
    }
}

#[derive(Clone, Debug, Default)]
pub struct FfnnFamily {
    pub base: FfnnConfig,
}

impl<T: Scalar> ModelFamily<T> for FfnnFamily {
    type Config = FfnnConfig;

    fn name(&self) -> &str {
        "ffnn"
    }

    fn configure(&self, sample: &ParamSample, seed: u64) -> Result<FfnnConfig, TuneError> {
        let mut cfg = self.base.clone();
        let hidden = as_count(sample, "hidden")?;
        cfg.hidden_sizes = vec![hidden; as_count(sample, "layers")?];
        cfg.dropout_rate = sample.require("dropout")?;
        cfg.l2_lambda = sample.require("l2")?;
        cfg.epochs = as_count(sample, "epochs")?;
        if let Some(lr) = sample.get("learning_rate") {
            cfg.learning_rate = lr;
        }
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }

    fn train(
        &self,
        config: &FfnnConfig,
        train_windows: &[Window<T>],
    ) -> Result<Box<dyn Scorer<T>>, TuneError> {
        Ok(Box::new(train_ffnn(train_windows, config)?))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LogisticFamily {
    pub base: LogisticConfig,
}

impl<T: Scalar> ModelFamily<T> for LogisticFamily {
    type Config = LogisticConfig;

    fn name(&self) -> &str {
        "logistic"
    }

    fn configure(&self, sample: &ParamSample, seed: u64) -> Result<LogisticConfig, TuneError> {
        let mut cfg = self.base.clone();
        cfg.l2_lambda = sample.require("l2")?;
        cfg.epochs = as_count(sample, "epochs")?;
        if let Some(lr) = sample.get("learning_rate") {
            cfg.learning_rate = lr;
        }
        cfg.seed = seed;
        Ok(cfg)
    }

    fn train(
        &self,
        config: &LogisticConfig,
        train_windows: &[Window<T>],
    ) -> Result<Box<dyn Scorer<T>>, TuneError> {
        Ok(Box::new(train_logistic(train_windows, config)?))
    }
}
