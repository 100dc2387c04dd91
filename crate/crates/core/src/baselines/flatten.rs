//! Flat encoding of a window for the non-recurrent baselines.
//!
//! Layout: the `n` event values, then the `n x d` dynamic block day by day,
//! then the `s` statics.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::windowing::Window;

pub fn flattened_dim(n: usize, num_dynamic: usize, num_static: usize) -> usize {
    n * (1 + num_dynamic) + num_static
}

pub fn flatten<T: Scalar>(window: &Window<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(flattened_dim(
        window.len(),
        window.num_dynamic(),
        window.num_static(),
    ));
    flatten_into(window, &mut out);
    out
}

fn flatten_into<T: Scalar>(window: &Window<T>, out: &mut Vec<T>) {
    out.extend_from_slice(window.events());
    out.extend_from_slice(window.dynamic_block());
    out.extend_from_slice(window.statics());
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatParts<T> {
    pub events: Vec<T>,
    /// Day-major `n x d`.
    pub dynamics: Vec<T>,
    pub statics: Vec<T>,
}

/// Splits a flat vector back into its blocks. `None` if the length does not
/// match the given shape.
pub fn unflatten<T: Copy>(
    flat: &[T],
    n: usize,
    num_dynamic: usize,
    num_static: usize,
) -> Option<FlatParts<T>> {
    if flat.len() != flattened_dim(n, num_dynamic, num_static) {
        return None;
    }
    let (events, rest) = flat.split_at(n);
    let (dynamics, statics) = rest.split_at(n * num_dynamic);
    Some(FlatParts {
        events: events.to_vec(),
        dynamics: dynamics.to_vec(),
        statics: statics.to_vec(),
    })
}

/// Row-major design matrix with labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatDataset<T> {
    pub dim: usize,
    pub rows: Vec<T>,
    pub labels: Vec<u8>,
}

impl<T: Scalar> FlatDataset<T> {
    /// All windows must share one shape; returns `None` otherwise.
    pub fn from_windows(windows: &[Window<T>]) -> Option<Self> {
        let first = windows.first()?;
        let dim = flattened_dim(first.len(), first.num_dynamic(), first.num_static());
        let mut rows = Vec::with_capacity(dim * windows.len());
        for w in windows {
            if flattened_dim(w.len(), w.num_dynamic(), w.num_static()) != dim {
                return None;
            }
            flatten_into(w, &mut rows);
        }
        Some(Self {
            dim,
            rows,
            labels: windows.iter().map(|w| w.label()).collect(),
        })
    }

    pub fn new(dim: usize, rows: Vec<T>, labels: Vec<u8>) -> Option<Self> {
        (dim > 0 && rows.len() == dim * labels.len()).then_some(Self { dim, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}
