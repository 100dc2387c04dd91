//! Stacked many-to-one LSTM with a single sigmoid output neuron, and its
//! backpropagation through time.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{item_logit_grad, item_loss, l2_penalty, LossWeights};
use super::lstm::{cell_step, cell_step_backward, LstmLayerRef};
use super::ModelError;
use crate::scalar::{dot, Scalar};
use crate::windowing::Window;

/// Offsets of every tensor inside the flat parameter vector:
/// `[W_1 | b_1 | ... | W_Z | b_Z | w_d | beta]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl ParamLayout {
    pub fn new(input_dim: usize, hidden: usize, layers: usize) -> Result<Self, ModelError> {
        if input_dim == 0 || hidden == 0 || layers == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "input_dim, hidden and layers must be positive (got {input_dim}, {hidden}, {layers})"
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            layers,
        })
    }

    pub fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else {
            self.hidden
        }
    }

    fn layer_len(&self, l: usize) -> usize {
        4 * self.hidden * (self.layer_input(l) + self.hidden + 1)
    }

    fn layer_offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.layer_len(k)).sum()
    }

    pub fn layer_weights(&self, l: usize) -> Range<usize> {
        let start = self.layer_offset(l);
        start..start + 4 * self.hidden * (self.layer_input(l) + self.hidden)
    }

    pub fn layer_bias(&self, l: usize) -> Range<usize> {
        let end = self.layer_offset(l) + self.layer_len(l);
        end - 4 * self.hidden..end
    }

    pub fn head_weights(&self) -> Range<usize> {
        let start = self.layer_offset(self.layers);
        start..start + self.hidden
    }

    pub fn head_bias(&self) -> usize {
        self.head_weights().end
    }

    pub fn len(&self) -> usize {
        self.head_bias() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ranges covered by the L2 penalty: every weight matrix and the output
    /// weight vector, never a bias.
    pub fn penalised_ranges(&self) -> Vec<Range<usize>> {
        let mut r: Vec<_> = (0..self.layers).map(|l| self.layer_weights(l)).collect();
        r.push(self.head_weights());
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub layout: ParamLayout,
    pub values: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(layout: ParamLayout) -> Self {
        Self {
            layout,
            values: vec![T::zero(); layout.len()],
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, zero biases except the forget
    /// gate bias, which starts at 1.
    pub fn init<R: Rng + ?Sized>(layout: ParamLayout, rng: &mut R) -> Self {
        let mut p = Self::zeros(layout);
        let h = layout.hidden;
        for l in 0..layout.layers {
            let bound = 1.0 / ((layout.layer_input(l) + h) as f64).sqrt();
            for w in &mut p.values[layout.layer_weights(l)] {
                *w = T::of(rng.random_range(-bound..bound));
            }
            let b = layout.layer_bias(l);
            for v in &mut p.values[b.start + h..b.start + 2 * h] {
                *v = T::one();
            }
        }
        let bound = 1.0 / (h as f64).sqrt();
        for w in &mut p.values[layout.head_weights()] {
            *w = T::of(rng.random_range(-bound..bound));
        }
        p
    }

    pub fn layer(&self, l: usize) -> LstmLayerRef<'_, T> {
        LstmLayerRef {
            input_dim: self.layout.layer_input(l),
            hidden: self.layout.hidden,
            weights: &self.values[self.layout.layer_weights(l)],
            bias: &self.values[self.layout.layer_bias(l)],
        }
    }

    pub fn head_weights(&self) -> &[T] {
        &self.values[self.layout.head_weights()]
    }

    pub fn head_weights_mut(&mut self) -> &mut [T] {
        let r = self.layout.head_weights();
        &mut self.values[r]
    }

    pub fn head_bias(&self) -> T {
        self.values[self.layout.head_bias()]
    }

    pub fn set_head_bias(&mut self, beta: T) {
        let i = self.layout.head_bias();
        self.values[i] = beta;
    }

    pub fn penalised_values(&self) -> Vec<T> {
        self.layout
            .penalised_ranges()
            .into_iter()
            .flat_map(|r| self.values[r].iter().copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Inverted-dropout multipliers on every layer's output, one `n x h` block per
/// layer. Entries are `0` or `1 / (1 - rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks<T> {
    pub layers: Vec<Vec<T>>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub fn sample<R: Rng + ?Sized>(layout: &ParamLayout, n: usize, rate: f64, rng: &mut R) -> Self {
        let keep = T::of(1.0 / (1.0 - rate));
        let layers = (0..layout.layers)
            .map(|_| {
                (0..n * layout.hidden)
                    .map(|_| {
                        if rng.random::<f64>() < rate {
                            T::zero()
                        } else {
                            keep
                        }
                    })
                    .collect()
            })
            .collect();
        Self { layers }
    }

    pub fn filled(layout: &ParamLayout, n: usize, value: T) -> Self {
        Self {
            layers: vec![vec![value; n * layout.hidden]; layout.layers],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, Default)]
struct LayerCache<T> {
    /// `n x (in + h)`: the concatenated cell input at each step.
    v: Vec<T>,
    gates: Vec<T>,
    c: Vec<T>,
    tc: Vec<T>,
    h: Vec<T>,
    /// `h` after the dropout mask; what the next layer (or the head) sees.
    out: Vec<T>,
    /// Gradient with respect to `out`.
    d_out: Vec<T>,
}

/// Reusable buffers for one forward/backward pass.
#[derive(Clone, Debug)]
pub struct Workspace<T> {
    layout: ParamLayout,
    n: usize,
    layers: Vec<LayerCache<T>>,
    dh: Vec<T>,
    dc: Vec<T>,
    da: Vec<T>,
    dv: Vec<T>,
    zeros: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub fn new(layout: ParamLayout) -> Self {
        let h = layout.hidden;
        let max_k = layout.input_dim.max(h) + h;
        Self {
            layout,
            n: 0,
            layers: vec![LayerCache::default(); layout.layers],
            dh: vec![T::zero(); h],
            dc: vec![T::zero(); h],
            da: vec![T::zero(); 4 * h],
            dv: vec![T::zero(); max_k],
            zeros: vec![T::zero(); h],
        }
    }

    fn resize(&mut self, n: usize) {
        if self.n == n {
            return;
        }
        let h = self.layout.hidden;
        for (l, cache) in self.layers.iter_mut().enumerate() {
            let k = self.layout.layer_input(l) + h;
            cache.v = vec![T::zero(); n * k];
            cache.gates = vec![T::zero(); n * 4 * h];
            cache.c = vec![T::zero(); n * h];
            cache.tc = vec![T::zero(); n * h];
            cache.h = vec![T::zero(); n * h];
            cache.out = vec![T::zero(); n * h];
            cache.d_out = vec![T::zero(); n * h];
        }
        self.n = n;
    }
}

fn check_window<T: Scalar>(params: &ModelParams<T>, window: &Window<T>) -> Result<(), ModelError> {
    if window.input_dim() != params.layout.input_dim {
        return Err(ModelError::DimensionMismatch {
            what: "window input",
            expected: params.layout.input_dim,
            found: window.input_dim(),
        });
    }
    if window.is_empty() {
        return Err(ModelError::DimensionMismatch {
            what: "window length",
            expected: 1,
            found: 0,
        });
    }
    Ok(())
}

impl<T: Scalar> ModelParams<T> {
    /// Forward pass caching every activation; returns the output logit.
    pub fn forward_cached(
        &self,
        window: &Window<T>,
        masks: Option<&DropoutMasks<T>>,
        ws: &mut Workspace<T>,
    ) -> Result<T, ModelError> {
        check_window(self, window)?;
        let n = window.len();
        ws.resize(n);
        let h = self.layout.hidden;
        let m = self.layout.input_dim;
        for l in 0..self.layout.layers {
            let layer = self.layer(l);
            let k = layer.concat_dim();
            let in_dim = layer.input_dim;
            let (below, rest) = ws.layers.split_at_mut(l);
            let cache = &mut rest[0];
            for t in 0..n {
                let v = &mut cache.v[t * k..(t + 1) * k];
                if l == 0 {
                    window.write_input_row(t, &mut v[..m]);
                } else {
                    v[..in_dim].copy_from_slice(&below[l - 1].out[t * h..(t + 1) * h]);
                }
                if t == 0 {
                    v[in_dim..].iter_mut().for_each(|x| *x = T::zero());
                } else {
                    let (prev, _) = cache.h.split_at(t * h);
                    v[in_dim..].copy_from_slice(&prev[(t - 1) * h..]);
                }
                let (c_before, c_now) = cache.c.split_at_mut(t * h);
                let c_prev: &[T] = if t == 0 {
                    &ws.zeros
                } else {
                    &c_before[(t - 1) * h..]
                };
                cell_step(
                    &layer,
                    &cache.v[t * k..(t + 1) * k],
                    c_prev,
                    &mut cache.gates[t * 4 * h..(t + 1) * 4 * h],
                    &mut c_now[..h],
                    &mut cache.tc[t * h..(t + 1) * h],
                    &mut cache.h[t * h..(t + 1) * h],
                );
                let out = &mut cache.out[t * h..(t + 1) * h];
                out.copy_from_slice(&cache.h[t * h..(t + 1) * h]);
                if let Some(masks) = masks {
                    for (o, &mk) in out.iter_mut().zip(&masks.layers[l][t * h..(t + 1) * h]) {
                        *o *= mk;
                    }
                }
            }
        }
        let top = &ws.layers[self.layout.layers - 1];
        Ok(dot(self.head_weights(), &top.out[(n - 1) * h..n * h]) + self.head_bias())
    }

    /// Accumulates into `grads` the gradient of `dlogit * logit` for the window
    /// last passed to [`Self::forward_cached`].
    pub fn backward_cached(
        &self,
        masks: Option<&DropoutMasks<T>>,
        ws: &mut Workspace<T>,
        dlogit: T,
        grads: &mut [T],
    ) {
        let layout = self.layout;
        let n = ws.n;
        let h = layout.hidden;
        let top = layout.layers - 1;

        // output head
        {
            let last = &ws.layers[top].out[(n - 1) * h..n * h];
            let hw = layout.head_weights();
            for (g, &x) in grads[hw.clone()].iter_mut().zip(last) {
                *g += dlogit * x;
            }
            grads[layout.head_bias()] += dlogit;
            let d_out = &mut ws.layers[top].d_out;
            d_out.iter_mut().for_each(|x| *x = T::zero());
            for (d, &w) in d_out[(n - 1) * h..n * h]
                .iter_mut()
                .zip(self.head_weights())
            {
                *d = dlogit * w;
            }
        }

        for l in (0..layout.layers).rev() {
            let layer = self.layer(l);
            let k = layer.concat_dim();
            let in_dim = layer.input_dim;
            let (below, rest) = ws.layers.split_at_mut(l);
            let cache = &mut rest[0];
            if let Some(masks) = masks {
                for (d, &mk) in cache.d_out.iter_mut().zip(&masks.layers[l]) {
                    *d *= mk;
                }
            }
            if l > 0 {
                below[l - 1].d_out.iter_mut().for_each(|x| *x = T::zero());
            }
            let w_range = layout.layer_weights(l);
            let b_range = layout.layer_bias(l);
            let (gw_all, gb_all) = grads.split_at_mut(b_range.start);
            let gw = &mut gw_all[w_range];
            let gb = &mut gb_all[..4 * h];
            ws.dc.iter_mut().for_each(|x| *x = T::zero());
            // ws.dh carries dL/dh_{t} through the recurrence
            ws.dh.iter_mut().for_each(|x| *x = T::zero());
            for t in (0..n).rev() {
                for j in 0..h {
                    ws.dh[j] += cache.d_out[t * h + j];
                }
                let c_prev: &[T] = if t == 0 {
                    &ws.zeros
                } else {
                    &cache.c[(t - 1) * h..t * h]
                };
                let need_dv = l > 0 || t > 0;
                cell_step_backward(
                    &layer,
                    &cache.v[t * k..(t + 1) * k],
                    c_prev,
                    &cache.gates[t * 4 * h..(t + 1) * 4 * h],
                    &cache.tc[t * h..(t + 1) * h],
                    &ws.dh,
                    &mut ws.dc,
                    &mut ws.da,
                    gw,
                    gb,
                    if need_dv { Some(&mut ws.dv[..k]) } else { None },
                );
                if need_dv {
                    if l > 0 {
                        below[l - 1].d_out[t * h..(t + 1) * h].copy_from_slice(&ws.dv[..in_dim]);
                    }
                    ws.dh.copy_from_slice(&ws.dv[in_dim..k]);
                } else {
                    ws.dh.iter_mut().for_each(|x| *x = T::zero());
                }
            }
        }
    }

    /// `P(y_{n+1} = 1)` for one window. Train mode draws fresh dropout masks.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        window: &Window<T>,
        mode: Mode,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<T, ModelError> {
        let mut ws = Workspace::new(self.layout);
        let masks = match mode {
            Mode::Train if dropout_rate > 0.0 => Some(DropoutMasks::sample(
                &self.layout,
                window.len(),
                dropout_rate,
                rng,
            )),
            _ => None,
        };
        Ok(self
            .forward_cached(window, masks.as_ref(), &mut ws)?
            .sigmoid())
    }

    /// Eval-mode probabilities for a set of windows.
    pub fn predict_batch(&self, windows: &[Window<T>]) -> Result<Vec<T>, ModelError> {
        let mut ws = Workspace::new(self.layout);
        windows
            .iter()
            .map(|w| Ok(self.forward_cached(w, None, &mut ws)?.sigmoid()))
            .collect()
    }
}

/// Loss and its exact gradient for one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient<T> {
    pub loss: T,
    pub grads: Vec<T>,
}

/// Objective of one batch under fixed dropout masks (one per window, or none).
pub fn batch_objective<T: Scalar>(
    params: &ModelParams<T>,
    batch: &[&Window<T>],
    masks: Option<&[DropoutMasks<T>]>,
    weights: &LossWeights,
    l2_lambda: f64,
) -> Result<T, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut ws = Workspace::new(params.layout);
    let mut data = T::zero();
    for (i, w) in batch.iter().enumerate() {
        let z = params.forward_cached(w, masks.map(|m| &m[i]), &mut ws)?;
        data += item_loss(z.sigmoid(), w.label(), weights);
    }
    Ok(data / T::of(batch.len() as f64) + l2_penalty(&params.penalised_values(), l2_lambda))
}

/// Batch loss and gradient by backpropagation through time.
pub fn loss_and_gradient<T: Scalar>(
    params: &ModelParams<T>,
    batch: &[&Window<T>],
    masks: Option<&[DropoutMasks<T>]>,
    weights: &LossWeights,
    l2_lambda: f64,
    ws: &mut Workspace<T>,
) -> Result<BatchGradient<T>, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let scale = T::one() / T::of(batch.len() as f64);
    let mut grads = vec![T::zero(); params.layout.len()];
    let mut data = T::zero();
    for (i, w) in batch.iter().enumerate() {
        let mask = masks.map(|m| &m[i]);
        let z = params.forward_cached(w, mask, ws)?;
        let p = z.sigmoid();
        data += item_loss(p, w.label(), weights);
        let dz = item_logit_grad(p, w.label(), weights) * scale;
        params.backward_cached(mask, ws, dz, &mut grads);
    }
    let mut loss = data * scale;
    if l2_lambda != 0.0 {
        let lambda = T::of(l2_lambda);
        for r in params.layout.penalised_ranges() {
            for (g, &w) in grads[r.clone()].iter_mut().zip(&params.values[r]) {
                *g += lambda * w;
            }
        }
        loss += l2_penalty(&params.penalised_values(), l2_lambda);
    }
    Ok(BatchGradient { loss, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windowing::{build_windows, PatientSeries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn toy_window(input_dim: usize, n: usize) -> Window<f64> {
        use crate::cohort::PatientRecord;
        let d = input_dim - 1;
        let tp = n + 1;
        let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let rec = PatientRecord {
            patient_id: "t".into(),
            timestamps: (0..tp)
                .map(|i| start + chrono::Days::new(i as u64))
                .collect(),
            events: (0..tp).map(|i| Some((i % 2) as u8)).collect(),
            dynamics: (0..d)
                .map(|j| (0..tp).map(|i| Some((i as f64 - j as f64) * 0.3)).collect())
                .collect(),
            statics: vec![],
        };
        let s = Arc::new(PatientSeries::from_record(&rec).unwrap());
        build_windows(&s, n).remove(0)
    }

    #[test]
    fn layout_offsets_are_contiguous() {
        let l = ParamLayout::new(5, 3, 2).unwrap();
        assert_eq!(l.layer_weights(0), 0..4 * 3 * 8);
        assert_eq!(l.layer_bias(0), 96..108);
        assert_eq!(l.layer_weights(1).start, 108);
        assert_eq!(l.layer_bias(1).end, 108 + 4 * 3 * 7);
        assert_eq!(l.head_weights(), 192..195);
        assert_eq!(l.head_bias(), 195);
        assert_eq!(l.len(), 196);
    }

    #[test]
    fn zero_head_gives_one_half() {
        let layout = ParamLayout::new(3, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = ModelParams::<f64>::init(layout, &mut rng);
        p.head_weights_mut().iter_mut().for_each(|w| *w = 0.0);
        p.set_head_bias(0.0);
        let w = toy_window(3, 5);
        assert_eq!(p.forward(&w, Mode::Eval, 0.0, &mut rng).unwrap(), 0.5);
        p.set_head_bias(2.0);
        let y = p.forward(&w, Mode::Train, 0.3, &mut rng).unwrap();
        assert!((y - 0.880_797_077_977_882_3).abs() < 1e-15);
    }

    #[test]
    fn no_dropout_train_equals_eval() {
        let layout = ParamLayout::new(4, 5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ModelParams::<f64>::init(layout, &mut rng);
        let w = toy_window(4, 6);
        let a = p.forward(&w, Mode::Train, 0.0, &mut rng).unwrap();
        let b = p.forward(&w, Mode::Eval, 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn zero_top_mask_kills_head_weight_gradient() {
        let layout = ParamLayout::new(3, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ModelParams::<f64>::init(layout, &mut rng);
        let w = toy_window(3, 4);
        let mut masks = DropoutMasks::filled(&layout, 4, 2.0);
        masks.layers[1].iter_mut().for_each(|m| *m = 0.0);
        let all = [masks];
        let mut ws = Workspace::new(layout);
        let g = loss_and_gradient(&p, &[&w], Some(&all), &LossWeights::UNIT, 0.0, &mut ws).unwrap();
        assert!(g.grads[layout.head_weights()].iter().all(|&x| x == 0.0));
        // the output is sigmoid(beta) = 0.5, so dL/dbeta = 0.5 - y
        let expected = 0.5 - f64::from(w.label());
        assert!((g.grads[layout.head_bias()] - expected).abs() < 1e-15);
    }

    #[test]
    fn pure_l2_gradient() {
        let layout = ParamLayout::new(3, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ModelParams::<f64>::init(layout, &mut rng);
        let w = toy_window(3, 3);
        let zero_weights = LossWeights {
            positive: 0.0,
            negative: 0.0,
        };
        let mut ws = Workspace::new(layout);
        let g = loss_and_gradient(&p, &[&w], None, &zero_weights, 0.01, &mut ws).unwrap();
        for r in layout.penalised_ranges() {
            for i in r {
                assert!((g.grads[i] - 0.01 * p.values[i]).abs() < 1e-18);
            }
        }
        for i in layout
            .layer_bias(0)
            .chain(std::iter::once(layout.head_bias()))
        {
            assert_eq!(g.grads[i], 0.0);
        }
    }
}
