//! Mini-batch training loop, prediction and JSON checkpoints.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::loss::LossWeights;
use super::network::{loss_and_gradient, DropoutMasks, ModelParams, Workspace};
use super::{ModelConfig, ModelError};
use crate::scalar::Scalar;
use crate::windowing::Window;

/// RNG streams split off the model seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TrainedModel<T> {
    #[serde(default = "checkpoint_version")]
    pub format_version: u32,
    pub config: ModelConfig,
    pub window_len: usize,
    pub loss_weights: LossWeights,
    pub params: ModelParams<T>,
    pub loss_trace: Vec<LossRecord>,
}

/// Version tag written into every checkpoint.
pub const CHECKPOINT_VERSION: u32 = 1;

fn checkpoint_version() -> u32 {
    CHECKPOINT_VERSION
}

pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fits the network on `windows`, which must all share one length.
///
/// Every epoch visits the windows in a fresh seeded order; the last batch may
/// be smaller than `batch_size`. A non-finite batch loss aborts training.
pub fn train<T: Scalar>(
    config: &ModelConfig,
    windows: &[Window<T>],
) -> Result<TrainedModel<T>, ModelError> {
    config.validate()?;
    let first = windows.first().ok_or(ModelError::EmptyTraining)?;
    let window_len = first.len();
    for w in windows {
        if w.input_dim() != config.input_dim {
            return Err(ModelError::DimensionMismatch {
                what: "window input",
                expected: config.input_dim,
                found: w.input_dim(),
            });
        }
        if w.len() != window_len {
            return Err(ModelError::DimensionMismatch {
                what: "window length",
                expected: window_len,
                found: w.len(),
            });
        }
    }
    let layout = config.layout()?;
    let loss_weights =
        LossWeights::from_labels(config.loss_weighting, windows.iter().map(|w| w.label()));

    let mut params = ModelParams::<T>::init(layout, &mut seeded_stream(config.seed, STREAM_INIT));
    let mut shuffle_rng = seeded_stream(config.seed, STREAM_SHUFFLE);
    let mut dropout_rng = seeded_stream(config.seed, STREAM_DROPOUT);
    let mut adam = AdamState::<T>::new(layout.len());
    let mut ws = Workspace::new(layout);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut loss_trace = Vec::new();

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Window<T>> = chunk.iter().map(|&i| &windows[i]).collect();
            let masks: Option<Vec<DropoutMasks<T>>> = (config.dropout_rate > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| {
                        DropoutMasks::sample(
                            &layout,
                            window_len,
                            config.dropout_rate,
                            &mut dropout_rng,
                        )
                    })
                    .collect()
            });
            let g = loss_and_gradient(
                &params,
                &batch,
                masks.as_deref(),
                &loss_weights,
                config.l2_lambda,
                &mut ws,
            )?;
            if !g.loss.is_finite() || g.grads.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_trace.push(LossRecord {
                epoch,
                batch: batch_idx,
                loss: g.loss.as_f64(),
            });
            adam.step(&mut params.values, &g.grads, config.learning_rate);
        }
    }
    Ok(TrainedModel {
        format_version: CHECKPOINT_VERSION,
        config: config.clone(),
        window_len,
        loss_weights,
        params,
        loss_trace,
    })
}

impl<T: Scalar> TrainedModel<T> {
    /// Eval-mode probabilities, one per window.
    pub fn predict(&self, windows: &[Window<T>]) -> Result<Vec<T>, ModelError> {
        if let Some(w) = windows.iter().find(|w| w.len() != self.window_len) {
            return Err(ModelError::DimensionMismatch {
                what: "window length",
                expected: self.window_len,
                found: w.len(),
            });
        }
        self.params.predict_batch(windows)
    }

    /// Mean batch loss per epoch.
    pub fn epoch_losses(&self) -> Vec<f64> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for r in &self.loss_trace {
            if out.len() <= r.epoch {
                out.resize(r.epoch + 1, (0.0, 0));
            }
            out[r.epoch].0 += r.loss;
            out[r.epoch].1 += 1;
        }
        out.into_iter().map(|(s, c)| s / c.max(1) as f64).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<(), ModelError> {
        let ck = |e: std::io::Error| ModelError::Checkpoint(format!("{}: {e}", path.display()));
        let mut out = BufWriter::new(File::create(path).map_err(ck)?);
        serde_json::to_writer(&mut out, self).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        out.flush().map_err(ck)
    }

    pub fn load_json(path: &Path) -> Result<Self, ModelError> {
        let file = File::open(path)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        let model: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if model.format_version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                model.format_version
            )));
        }
        let expected = model.config.layout()?;
        if model.params.layout != expected || model.params.values.len() != expected.len() {
            return Err(ModelError::Checkpoint(
                "parameter vector does not match the stored configuration".into(),
            ));
        }
        Ok(model)
    }

    /// Writes `epoch,batch,loss` rows.
    pub fn write_loss_trace<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.loss_trace {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
