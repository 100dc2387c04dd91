//! Pooled sliding windows, the per-patient sequential train/test split and
//! expanding cross-validation folds.
//!
//! Indices follow the 1-based convention of the window layout: window `w` of
//! length `n` covers days `w..=w+n-1` and is labelled with the event of day
//! `w+n` (its `label_index`), for `w = 1..=Tp-n`.

use std::io::Write;
use std::sync::Arc;

use chrono::NaiveDate;
use thiserror::Error;

use crate::cohort::{Cohort, PatientRecord};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("patient `{0}` has missing values; impute before windowing")]
    MissingValue(String),
    #[error(
        "patient `{patient_id}`: {rho} test windows requested but only {available} windows exist (Tp={tp}, n={n})"
    )]
    InsufficientHistory {
        patient_id: String,
        tp: usize,
        n: usize,
        rho: usize,
        available: usize,
    },
    #[error("window length must be at least 1")]
    ZeroLength,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = WindowError> = std::result::Result<T, E>;

/// Number of test windows taken from the end of a series of length `tp`.
pub fn test_window_count(tp: usize, test_fraction: f64) -> usize {
    (test_fraction * tp as f64 + 1e-9).floor() as usize
}

/// Number of leading days that feed at least one training window. Independent
/// of the window length as long as a training window exists.
pub fn train_input_days(tp: usize, test_fraction: f64) -> usize {
    tp.saturating_sub(test_window_count(tp, test_fraction) + 1)
}

/// Fully observed, model-ready copy of one series.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientSeries<T> {
    pub patient_id: String,
    pub timestamps: Vec<NaiveDate>,
    pub labels: Vec<u8>,
    events: Vec<T>,
    /// Row-major `Tp x num_dynamic`.
    dynamics: Vec<T>,
    statics: Vec<T>,
    num_dynamic: usize,
}

impl<T: Scalar> PatientSeries<T> {
    pub fn from_record(rec: &PatientRecord) -> Result<Self> {
        let missing = || WindowError::MissingValue(rec.patient_id.clone());
        let labels = rec.observed_events().ok_or_else(missing)?;
        let tp = rec.len();
        let d = rec.dynamics.len();
        let mut dynamics = Vec::with_capacity(tp * d);
        for t in 0..tp {
            for series in &rec.dynamics {
                dynamics.push(T::of(series[t].ok_or_else(missing)?));
            }
        }
        Ok(Self {
            patient_id: rec.patient_id.clone(),
            timestamps: rec.timestamps.clone(),
            events: labels.iter().map(|&y| T::of(f64::from(y))).collect(),
            labels,
            dynamics,
            statics: rec.statics.iter().map(|&v| T::of(v)).collect(),
            num_dynamic: d,
        })
    }

    pub fn from_cohort(cohort: &Cohort) -> Result<Vec<Arc<Self>>> {
        cohort
            .patients
            .iter()
            .map(|p| Self::from_record(p).map(Arc::new))
            .collect()
    }
}

impl<T> PatientSeries<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_dynamic(&self) -> usize {
        self.num_dynamic
    }

    pub fn num_static(&self) -> usize {
        self.statics.len()
    }
}

/// A length-`n` slice of one series plus its next-day label. Cheap to clone.
#[derive(Debug)]
pub struct Window<T> {
    source: Arc<PatientSeries<T>>,
    start: usize,
    len: usize,
}

impl<T> Clone for Window<T> {
    fn clone(&self) -> Self {
        Self {
            source: Arc::clone(&self.source),
            start: self.start,
            len: self.len,
        }
    }
}

impl<T: Scalar> Window<T> {
    /// Event block `y_w..y_{w+n-1}`.
    pub fn events(&self) -> &[T] {
        &self.source.events[self.start - 1..self.start - 1 + self.len]
    }

    /// Dynamic block, row-major `n x num_dynamic`.
    pub fn dynamic_block(&self) -> &[T] {
        let d = self.source.num_dynamic;
        &self.source.dynamics[(self.start - 1) * d..(self.start - 1 + self.len) * d]
    }

    /// Dynamic values on step `t` (0-based within the window).
    pub fn dynamic_row(&self, t: usize) -> &[T] {
        let d = self.source.num_dynamic;
        &self.dynamic_block()[t * d..(t + 1) * d]
    }

    pub fn statics(&self) -> &[T] {
        &self.source.statics
    }

    /// Writes `x_t = y_t ++ D_t ++ S` for step `t` into `out`.
    pub fn write_input_row(&self, t: usize, out: &mut [T]) {
        let d = self.source.num_dynamic;
        out[0] = self.events()[t];
        out[1..1 + d].copy_from_slice(self.dynamic_row(t));
        out[1 + d..].copy_from_slice(self.statics());
    }
}

impl<T> Window<T> {
    pub fn patient_id(&self) -> &str {
        &self.source.patient_id
    }

    pub fn source(&self) -> &Arc<PatientSeries<T>> {
        &self.source
    }

    /// 1-based start index `w`.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// 1-based index of the labelled day, `w + n`.
    pub fn label_index(&self) -> usize {
        self.start + self.len
    }

    pub fn label(&self) -> u8 {
        self.source.labels[self.label_index() - 1]
    }

    pub fn label_date(&self) -> NaiveDate {
        self.source.timestamps[self.label_index() - 1]
    }

    pub fn num_dynamic(&self) -> usize {
        self.source.num_dynamic
    }

    pub fn num_static(&self) -> usize {
        self.source.statics.len()
    }

    /// Recurrent input width `1 + |F_d| + |F_s|`.
    pub fn input_dim(&self) -> usize {
        1 + self.num_dynamic() + self.num_static()
    }
}

/// All `max(0, Tp - n)` windows of one series, in chronological order.
pub fn build_windows<T>(series: &Arc<PatientSeries<T>>, n: usize) -> Vec<Window<T>> {
    if n == 0 {
        return Vec::new();
    }
    let tp = series.labels.len();
    (1..=tp.saturating_sub(n))
        .map(|start| Window {
            source: Arc::clone(series),
            start,
            len: n,
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PatientSplit<T> {
    pub patient_id: String,
    pub tp: usize,
    /// Number of test windows, `floor(test_fraction * Tp)`.
    pub rho: usize,
    pub train: Vec<Window<T>>,
    pub test: Vec<Window<T>>,
}

#[derive(Clone, Debug)]
pub struct SplitWindows<T> {
    pub n: usize,
    pub test_fraction: f64,
    pub patients: Vec<PatientSplit<T>>,
}

impl<T> SplitWindows<T> {
    pub fn train(&self) -> Vec<Window<T>> {
        self.patients
            .iter()
            .flat_map(|p| p.train.iter().cloned())
            .collect()
    }

    pub fn test(&self) -> Vec<Window<T>> {
        self.patients
            .iter()
            .flat_map(|p| p.test.iter().cloned())
            .collect()
    }

    pub fn train_len(&self) -> usize {
        self.patients.iter().map(|p| p.train.len()).sum()
    }

    pub fn test_len(&self) -> usize {
        self.patients.iter().map(|p| p.test.len()).sum()
    }
}

/// Windows every series with length `n` and sends the last
/// `rho = floor(test_fraction * Tp)` windows of each patient to the test set.
pub fn split_train_test<T>(
    series: &[Arc<PatientSeries<T>>],
    n: usize,
    test_fraction: f64,
) -> Result<SplitWindows<T>> {
    if n == 0 {
        return Err(WindowError::ZeroLength);
    }
    let mut patients = Vec::with_capacity(series.len());
    for s in series {
        let tp = s.labels.len();
        let rho = test_window_count(tp, test_fraction);
        let mut train = build_windows(s, n);
        if train.len() < rho {
            return Err(WindowError::InsufficientHistory {
                patient_id: s.patient_id.clone(),
                tp,
                n,
                rho,
                available: train.len(),
            });
        }
        let test = train.split_off(train.len() - rho);
        patients.push(PatientSplit {
            patient_id: s.patient_id.clone(),
            tp,
            rho,
            train,
            test,
        });
    }
    Ok(SplitWindows {
        n,
        test_fraction,
        patients,
    })
}

/// Sizes of `pools` chronological pools over `count` windows; the remainder
/// goes to the earliest pools.
pub fn pool_sizes(count: usize, pools: usize) -> Vec<usize> {
    let base = count / pools;
    let extra = count % pools;
    (0..pools).map(|i| base + usize::from(i < extra)).collect()
}

#[derive(Clone, Debug)]
pub struct Fold<T> {
    pub train: Vec<Window<T>>,
    pub validation: Vec<Window<T>>,
}

#[derive(Clone, Debug)]
pub struct CvFolds<T> {
    pub folds: Vec<Fold<T>>,
    /// Patients with fewer than `k + 1` training windows.
    pub excluded: Vec<String>,
}

/// Expanding sequential folds: each patient's training windows are cut into
/// `k + 1` chronological pools; fold `i` trains on pools `1..=i` and
/// validates on pool `i + 1`. Folds are pooled across patients.
pub fn build_cv_folds<T>(split: &SplitWindows<T>, k: usize) -> CvFolds<T> {
    let pools = k + 1;
    let mut folds: Vec<Fold<T>> = (0..k)
        .map(|_| Fold {
            train: Vec::new(),
            validation: Vec::new(),
        })
        .collect();
    let mut excluded = Vec::new();
    for p in &split.patients {
        if p.train.len() < pools {
            excluded.push(p.patient_id.clone());
            continue;
        }
        let sizes = pool_sizes(p.train.len(), pools);
        let mut bounds = Vec::with_capacity(pools + 1);
        bounds.push(0);
        for s in &sizes {
            bounds.push(bounds.last().unwrap() + s);
        }
        for (i, fold) in folds.iter_mut().enumerate() {
            fold.train.extend_from_slice(&p.train[..bounds[i + 1]]);
            fold.validation
                .extend_from_slice(&p.train[bounds[i + 1]..bounds[i + 2]]);
        }
    }
    CvFolds { folds, excluded }
}

/// Audit dump: `patient_id,w,n,label_index,label`.
pub fn write_window_dump<T, W: Write>(windows: &[Window<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "w", "n", "label_index", "label"])?;
    for win in windows {
        w.write_record([
            win.patient_id().to_string(),
            win.start().to_string(),
            win.len().to_string(),
            win.label_index().to_string(),
            win.label().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
