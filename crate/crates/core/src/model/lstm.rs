//! Standard LSTM cell (no peepholes). Gate rows are stacked in the order
//! input, forget, candidate, output; each weight row acts on `[x_t; h_{t-1}]`.

use super::ModelError;
use crate::scalar::{axpy, dot, Scalar};

/// Borrowed view of one layer's parameters.
#[derive(Clone, Copy, Debug)]
pub struct LstmLayerRef<'a, T> {
    pub input_dim: usize,
    pub hidden: usize,
    /// Row-major `4h x (input_dim + h)`.
    pub weights: &'a [T],
    /// `4h`.
    pub bias: &'a [T],
}

impl<T> LstmLayerRef<'_, T> {
    pub fn concat_dim(&self) -> usize {
        self.input_dim + self.hidden
    }
}

/// One step of the cell: returns `(h_t, c_t)`.
pub fn lstm_cell_forward<T: Scalar>(
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    layer: LstmLayerRef<'_, T>,
) -> Result<(Vec<T>, Vec<T>), ModelError> {
    let h = layer.hidden;
    let check = |what, expected: usize, found: usize| {
        if expected == found {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    };
    check("input", layer.input_dim, x.len())?;
    check("hidden state", h, h_prev.len())?;
    check("cell state", h, c_prev.len())?;
    check("weights", 4 * h * layer.concat_dim(), layer.weights.len())?;
    check("bias", 4 * h, layer.bias.len())?;

    let mut v = Vec::with_capacity(layer.concat_dim());
    v.extend_from_slice(x);
    v.extend_from_slice(h_prev);
    let mut gates = vec![T::zero(); 4 * h];
    let mut c = vec![T::zero(); h];
    let mut tc = vec![T::zero(); h];
    let mut out = vec![T::zero(); h];
    cell_step(&layer, &v, c_prev, &mut gates, &mut c, &mut tc, &mut out);
    Ok((out, c))
}

/// Forward step into caller-provided buffers. `gates` receives activated gate values.
#[inline]
pub(crate) fn cell_step<T: Scalar>(
    layer: &LstmLayerRef<'_, T>,
    v: &[T],
    c_prev: &[T],
    gates: &mut [T],
    c: &mut [T],
    tc: &mut [T],
    h_out: &mut [T],
) {
    let h = layer.hidden;
    let k = layer.concat_dim();
    for (r, a) in gates.iter_mut().enumerate() {
        let pre = layer.bias[r] + dot(&layer.weights[r * k..(r + 1) * k], v);
        *a = if (2 * h..3 * h).contains(&r) {
            pre.tanh()
        } else {
            pre.sigmoid()
        };
    }
    for j in 0..h {
        let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
        c[j] = f * c_prev[j] + i * g;
        tc[j] = c[j].tanh();
        h_out[j] = o * tc[j];
    }
}

/// Backward step. `dh` is the total gradient on `h_t`; `dc` holds the gradient
/// on `c_t` arriving from step `t+1` and is overwritten with the gradient on
/// `c_{t-1}`. Parameter gradients accumulate into `dw`/`db`; the gradient on
/// `[x_t; h_{t-1}]` is written to `dv` when requested.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn cell_step_backward<T: Scalar>(
    layer: &LstmLayerRef<'_, T>,
    v: &[T],
    c_prev: &[T],
    gates: &[T],
    tc: &[T],
    dh: &[T],
    dc: &mut [T],
    da: &mut [T],
    dw: &mut [T],
    db: &mut [T],
    dv: Option<&mut [T]>,
) {
    let h = layer.hidden;
    let k = layer.concat_dim();
    let one = T::one();
    for j in 0..h {
        let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
        let d_o = dh[j] * tc[j];
        let d_c = dh[j] * o * (one - tc[j] * tc[j]) + dc[j];
        da[j] = d_c * g * i * (one - i);
        da[h + j] = d_c * c_prev[j] * f * (one - f);
        da[2 * h + j] = d_c * i * (one - g * g);
        da[3 * h + j] = d_o * o * (one - o);
        dc[j] = d_c * f;
    }
    for (r, &d) in da.iter().enumerate() {
        db[r] += d;
        axpy(d, v, &mut dw[r * k..(r + 1) * k]);
    }
    if let Some(dv) = dv {
        dv.iter_mut().for_each(|x| *x = T::zero());
        for (r, &d) in da.iter().enumerate() {
            axpy(d, &layer.weights[r * k..(r + 1) * k], dv);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_layer(input_dim: usize, hidden: usize) -> (Vec<f64>, Vec<f64>) {
        (
            vec![0.0; 4 * hidden * (input_dim + hidden)],
            vec![0.0; 4 * hidden],
        )
    }

    #[test]
    fn zero_parameters_halve_the_cell() {
        let (w, b) = zero_layer(3, 2);
        let layer = LstmLayerRef {
            input_dim: 3,
            hidden: 2,
            weights: &w,
            bias: &b,
        };
        let c_prev = [0.8, -2.0];
        let (h, c) = lstm_cell_forward(&[1.0, -4.0, 9.0], &[0.3, 0.1], &c_prev, layer).unwrap();
        for j in 0..2 {
            assert!((c[j] - 0.5 * c_prev[j]).abs() < 1e-15);
            assert!((h[j] - 0.5 * (0.5 * c_prev[j]).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_everything_is_a_fixed_point() {
        let (w, b) = zero_layer(2, 3);
        let layer = LstmLayerRef {
            input_dim: 2,
            hidden: 3,
            weights: &w,
            bias: &b,
        };
        let (h, c) = lstm_cell_forward(&[0.0, 0.0], &[0.0; 3], &[0.0; 3], layer).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(c, vec![0.0; 3]);
    }

    #[test]
    fn outputs_bounded() {
        let w: Vec<f64> = (0..4 * 2 * 4)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 3.0)
            .collect();
        let b = vec![5.0; 8];
        let layer = LstmLayerRef {
            input_dim: 2,
            hidden: 2,
            weights: &w,
            bias: &b,
        };
        let (h, _) = lstm_cell_forward(&[100.0, -50.0], &[0.9, -0.9], &[3.0, -7.0], layer).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let (w, b) = zero_layer(2, 2);
        let layer = LstmLayerRef {
            input_dim: 2,
            hidden: 2,
            weights: &w,
            bias: &b,
        };
        assert!(matches!(
            lstm_cell_forward(&[0.0; 3], &[0.0; 2], &[0.0; 2], layer),
            Err(ModelError::DimensionMismatch { what: "input", .. })
        ));
    }
}
