//! Class-weighted binary cross-entropy.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::Scalar;

/// Predictions are clipped to `[EPS_CLIP, 1 - EPS_CLIP]` inside the logarithms.
pub const EPS_CLIP: f64 = 1e-7;

/// How the class weights are derived from the training labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossWeighting {
    /// `gamma_p = N_neg / N_pos`, `gamma_n = 1`.
    #[default]
    InverseFrequency,
    /// `gamma_p = N_pos / N_neg`, `gamma_n = N_neg / N_pos`.
    PositiveToNegativeRatio,
    /// Plain binary cross-entropy.
    Unweighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub positive: f64,
    pub negative: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::UNIT
    }
}

impl LossWeights {
    pub const UNIT: Self = Self {
        positive: 1.0,
        negative: 1.0,
    };

    pub fn new(positive: f64, negative: f64) -> Result<Self, ModelError> {
        if !(positive > 0.0 && negative > 0.0 && positive.is_finite() && negative.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "loss weights must be positive and finite, got ({positive}, {negative})"
            )));
        }
        Ok(Self { positive, negative })
    }

    /// Weights for a training label set. Falls back to unit weights when one
    /// class is absent.
    pub fn from_labels(mode: LossWeighting, labels: impl IntoIterator<Item = u8>) -> Self {
        let (mut pos, mut neg) = (0usize, 0usize);
        for y in labels {
            if y == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        if pos == 0 || neg == 0 {
            return Self::UNIT;
        }
        let ratio = neg as f64 / pos as f64;
        match mode {
            LossWeighting::InverseFrequency => Self {
                positive: ratio,
                negative: 1.0,
            },
            LossWeighting::PositiveToNegativeRatio => Self {
                positive: 1.0 / ratio,
                negative: ratio,
            },
            LossWeighting::Unweighted => Self::UNIT,
        }
    }
}

/// Per-item weighted cross-entropy, with clipping.
#[inline]
pub fn item_loss<T: Scalar>(pred: T, label: u8, weights: &LossWeights) -> T {
    let eps = T::of(EPS_CLIP);
    let p = pred.max(eps).min(T::one() - eps);
    if label == 1 {
        -p.ln() * T::of(weights.positive)
    } else {
        -(T::one() - p).ln() * T::of(weights.negative)
    }
}

/// Derivative of [`item_loss`] with respect to the logit `z`, where `pred = sigmoid(z)`.
/// Zero where clipping is active.
#[inline]
pub fn item_logit_grad<T: Scalar>(pred: T, label: u8, weights: &LossWeights) -> T {
    let eps = T::of(EPS_CLIP);
    if pred < eps || pred > T::one() - eps {
        return T::zero();
    }
    if label == 1 {
        (pred - T::one()) * T::of(weights.positive)
    } else {
        pred * T::of(weights.negative)
    }
}

/// Mean weighted cross-entropy over the batch plus `(lambda / 2) * sum(w^2)`
/// over the penalised weights.
pub fn batch_loss<T: Scalar>(
    preds: &[T],
    labels: &[u8],
    weights: &LossWeights,
    penalised: &[T],
    l2_lambda: f64,
) -> Result<T, ModelError> {
    if preds.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    if preds.len() != labels.len() {
        return Err(ModelError::DimensionMismatch {
            what: "labels",
            expected: preds.len(),
            found: labels.len(),
        });
    }
    let data: T = preds
        .iter()
        .zip(labels)
        .map(|(&p, &y)| item_loss(p, y, weights))
        .sum::<T>()
        / T::of(preds.len() as f64);
    Ok(data + l2_penalty(penalised, l2_lambda))
}

pub fn l2_penalty<T: Scalar>(weights: &[T], l2_lambda: f64) -> T {
    if l2_lambda == 0.0 {
        return T::zero();
    }
    T::of(l2_lambda / 2.0) * weights.iter().map(|&w| w * w).sum::<T>()
}
