//! Small fully connected network with tanh hidden units and one sigmoid
//! output. With no hidden layers it is logistic regression.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::flatten::FlatDataset;
use super::BaselineError;
use crate::model::loss::{item_logit_grad, item_loss, l2_penalty};
use crate::model::{AdamState, LossWeighting, LossWeights};
use crate::scalar::{axpy, dot, Scalar};

/// Layer widths from input to output; the last entry is always 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpLayout {
    pub sizes: Vec<usize>,
}

impl MlpLayout {
    pub fn new(input_dim: usize, hidden: &[usize]) -> Result<Self, BaselineError> {
        if input_dim == 0 || hidden.contains(&0) {
            return Err(BaselineError::InvalidConfig(
                "layer widths must be positive".into(),
            ));
        }
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self { sizes })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn offset(&self, l: usize) -> usize {
        (0..l)
            .map(|k| (self.sizes[k] + 1) * self.sizes[k + 1])
            .sum()
    }

    pub fn weights(&self, l: usize) -> std::ops::Range<usize> {
        let s = self.offset(l);
        s..s + self.sizes[l] * self.sizes[l + 1]
    }

    pub fn bias(&self, l: usize) -> std::ops::Range<usize> {
        let s = self.weights(l).end;
        s..s + self.sizes[l + 1]
    }

    pub fn len(&self) -> usize {
        self.offset(self.num_layers())
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<T> {
    pub layout: MlpLayout,
    pub values: Vec<T>,
}

/// Inverted-dropout multipliers for each hidden layer of one example.
pub type HiddenMasks<T> = Vec<Vec<T>>;

impl<T: Scalar> MlpParams<T> {
    pub fn init<R: Rng + ?Sized>(layout: MlpLayout, rng: &mut R) -> Self {
        let mut values = vec![T::zero(); layout.len()];
        for l in 0..layout.num_layers() {
            let bound = 1.0 / (layout.sizes[l] as f64).sqrt();
            for w in &mut values[layout.weights(l)] {
                *w = T::of(rng.random_range(-bound..bound));
            }
        }
        Self { layout, values }
    }

    pub fn sample_masks<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> HiddenMasks<T> {
        let keep = T::of(1.0 / (1.0 - rate));
        self.layout.sizes[1..self.layout.sizes.len() - 1]
            .iter()
            .map(|&h| {
                (0..h)
                    .map(|_| {
                        if rng.random::<f64>() < rate {
                            T::zero()
                        } else {
                            keep
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Activations of every layer (input first) and the output logit.
    fn forward_all(&self, x: &[T], masks: Option<&HiddenMasks<T>>) -> (Vec<Vec<T>>, T) {
        let layout = &self.layout;
        let mut acts: Vec<Vec<T>> = vec![x.to_vec()];
        let last = layout.num_layers() - 1;
        for l in 0..last {
            let (inp, out) = (layout.sizes[l], layout.sizes[l + 1]);
            let w = &self.values[layout.weights(l)];
            let b = &self.values[layout.bias(l)];
            let prev = acts.last().expect("input layer");
            let mut a: Vec<T> = (0..out)
                .map(|j| (b[j] + dot(&w[j * inp..(j + 1) * inp], prev)).tanh())
                .collect();
            if let Some(m) = masks {
                for (v, &k) in a.iter_mut().zip(&m[l]) {
                    *v *= k;
                }
            }
            acts.push(a);
        }
        let w = &self.values[layout.weights(last)];
        let b = self.values[layout.bias(last).start];
        let z = b + dot(w, acts.last().expect("hidden layer"));
        (acts, z)
    }

    pub fn logit(&self, x: &[T]) -> T {
        self.forward_all(x, None).1
    }

    pub fn predict(&self, data: &FlatDataset<T>) -> Result<Vec<T>, BaselineError> {
        if data.dim != self.layout.input_dim() {
            return Err(BaselineError::DimensionMismatch {
                expected: self.layout.input_dim(),
                found: data.dim,
            });
        }
        Ok((0..data.len())
            .map(|i| self.logit(data.row(i)).sigmoid())
            .collect())
    }

    fn backward(&self, acts: &[Vec<T>], masks: Option<&HiddenMasks<T>>, dz: T, grads: &mut [T]) {
        let layout = &self.layout;
        let last = layout.num_layers() - 1;
        let mut delta = vec![dz];
        for l in (0..=last).rev() {
            let (inp, out) = (layout.sizes[l], layout.sizes[l + 1]);
            let a_in = &acts[l];
            let wr = layout.weights(l);
            let br = layout.bias(l);
            for j in 0..out {
                axpy(
                    delta[j],
                    a_in,
                    &mut grads[wr.start + j * inp..wr.start + (j + 1) * inp],
                );
                grads[br.start + j] += delta[j];
            }
            if l == 0 {
                break;
            }
            let w = &self.values[wr];
            let mut d_in = vec![T::zero(); inp];
            for j in 0..out {
                axpy(delta[j], &w[j * inp..(j + 1) * inp], &mut d_in);
            }
            // a_in = tanh(z) * mask, so da/dz = mask * (1 - tanh^2)
            let mask = masks.map(|m| &m[l - 1]);
            for (k, d) in d_in.iter_mut().enumerate() {
                let mk = mask.map_or(T::one(), |m| m[k]);
                let t = if mk == T::zero() {
                    T::zero()
                } else {
                    a_in[k] / mk
                };
                *d *= mk * (T::one() - t * t);
            }
            delta = d_in;
        }
    }

    fn penalised(&self) -> Vec<T> {
        (0..self.layout.num_layers())
            .flat_map(|l| self.values[self.layout.weights(l)].iter().copied())
            .collect()
    }

    /// Mean weighted cross-entropy over `rows` plus the L2 term on weights.
    pub fn objective(
        &self,
        data: &FlatDataset<T>,
        rows: &[usize],
        masks: Option<&[HiddenMasks<T>]>,
        weights: &LossWeights,
        l2_lambda: f64,
    ) -> T {
        let mut total = T::zero();
        for (k, &i) in rows.iter().enumerate() {
            let (_, z) = self.forward_all(data.row(i), masks.map(|m| &m[k]));
            total += item_loss(z.sigmoid(), data.labels[i], weights);
        }
        total / T::of(rows.len() as f64) + l2_penalty(&self.penalised(), l2_lambda)
    }

    /// Objective and exact gradient over `rows`.
    pub fn loss_and_gradient(
        &self,
        data: &FlatDataset<T>,
        rows: &[usize],
        masks: Option<&[HiddenMasks<T>]>,
        weights: &LossWeights,
        l2_lambda: f64,
    ) -> (T, Vec<T>) {
        let scale = T::one() / T::of(rows.len() as f64);
        let mut grads = vec![T::zero(); self.values.len()];
        let mut total = T::zero();
        for (k, &i) in rows.iter().enumerate() {
            let m = masks.map(|m| &m[k]);
            let (acts, z) = self.forward_all(data.row(i), m);
            let p = z.sigmoid();
            let y = data.labels[i];
            total += item_loss(p, y, weights);
            self.backward(&acts, m, item_logit_grad(p, y, weights) * scale, &mut grads);
        }
        let mut loss = total * scale;
        if l2_lambda != 0.0 {
            let lambda = T::of(l2_lambda);
            for l in 0..self.layout.num_layers() {
                let r = self.layout.weights(l);
                for (g, &w) in grads[r.clone()].iter_mut().zip(&self.values[r]) {
                    *g += lambda * w;
                }
            }
            loss += l2_penalty(&self.penalised(), l2_lambda);
        }
        (loss, grads)
    }
}

/// Optimiser settings shared by the dense baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub dropout_rate: f64,
    pub loss_weighting: LossWeighting,
    pub seed: u64,
}

impl FitSettings {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: String| Err(BaselineError::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad(format!(
                "l2_lambda must be non-negative, got {}",
                self.l2_lambda
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        Ok(())
    }
}

/// Mini-batch Adam on the weighted cross-entropy.
pub fn fit_mlp<T: Scalar>(
    layout: MlpLayout,
    data: &FlatDataset<T>,
    settings: &FitSettings,
) -> Result<(MlpParams<T>, LossWeights), BaselineError> {
    settings.validate()?;
    if data.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    if data.dim != layout.input_dim() {
        return Err(BaselineError::DimensionMismatch {
            expected: layout.input_dim(),
            found: data.dim,
        });
    }
    let weights = LossWeights::from_labels(settings.loss_weighting, data.labels.iter().copied());
    let mut params = MlpParams::init(
        layout,
        &mut crate::model::train::seeded_stream(settings.seed, 0),
    );
    let mut shuffle = crate::model::train::seeded_stream(settings.seed, 1);
    let mut drop_rng = crate::model::train::seeded_stream(settings.seed, 2);
    let mut adam = AdamState::<T>::new(params.values.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..settings.epochs {
        order.shuffle(&mut shuffle);
        for (batch, chunk) in order.chunks(settings.batch_size).enumerate() {
            let masks: Option<Vec<HiddenMasks<T>>> = (settings.dropout_rate > 0.0).then(|| {
                chunk
                    .iter()
                    .map(|_| params.sample_masks(settings.dropout_rate, &mut drop_rng))
                    .collect()
            });
            let (loss, grads) = params.loss_and_gradient(
                data,
                chunk,
                masks.as_deref(),
                &weights,
                settings.l2_lambda,
            );
            if !loss.is_finite() {
                return Err(BaselineError::Diverged { epoch, batch });
            }
            adam.step(&mut params.values, &grads, settings.learning_rate);
        }
    }
    Ok((params, weights))
}
