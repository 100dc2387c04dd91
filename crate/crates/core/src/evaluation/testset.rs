//! Test windows paired with the scores of every compared model.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::scalar::Scalar;
use crate::windowing::Window;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestKey {
    pub patient_id: String,
    /// 1-based day index of the label within the patient's series.
    pub label_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub name: String,
    pub scores: Vec<f64>,
}

/// Rows are grouped by patient and chronological within each patient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredTestSet {
    pub keys: Vec<TestKey>,
    pub labels: Vec<u8>,
    pub models: Vec<ModelScores>,
}

impl ScoredTestSet {
    /// Takes the keys and labels from test windows. Patients keep their order
    /// of first appearance; windows are sorted by label index within a patient.
    pub fn from_windows<T>(windows: &[Window<T>]) -> Result<Self, EvalError> {
        let rows: Vec<(TestKey, u8)> = windows
            .iter()
            .map(|w| {
                (
                    TestKey {
                        patient_id: w.patient_id().to_string(),
                        label_index: w.label_index(),
                    },
                    w.label(),
                )
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<(TestKey, u8)>) -> Result<Self, EvalError> {
        let mut first_seen: HashMap<&str, usize> = HashMap::new();
        for (k, _) in &rows {
            let n = first_seen.len();
            first_seen.entry(k.patient_id.as_str()).or_insert(n);
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| {
            (
                first_seen[rows[i].0.patient_id.as_str()],
                rows[i].0.label_index,
            )
        });
        for w in order.windows(2) {
            if rows[w[0]].0 == rows[w[1]].0 {
                return Err(EvalError::DuplicateKey(format!(
                    "{}@{}",
                    rows[w[0]].0.patient_id, rows[w[0]].0.label_index
                )));
            }
        }
        Ok(Self {
            keys: order.iter().map(|&i| rows[i].0.clone()).collect(),
            labels: order.iter().map(|&i| rows[i].1).collect(),
            models: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn prevalence(&self) -> f64 {
        self.labels.iter().filter(|&&y| y == 1).count() as f64 / self.len().max(1) as f64
    }

    /// Contiguous row ranges, one per patient.
    pub fn patient_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.keys.len() {
            if i == self.keys.len() || self.keys[i].patient_id != self.keys[start].patient_id {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    fn push_model(&mut self, name: &str, scores: Vec<f64>) -> Result<(), EvalError> {
        if self.models.iter().any(|m| m.name == name) {
            return Err(EvalError::DuplicateModel(name.to_string()));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(EvalError::NonFiniteScore { index: i });
        }
        self.models.push(ModelScores {
            name: name.to_string(),
            scores,
        });
        Ok(())
    }

    /// Adds scores given for windows that must carry exactly this set's
    /// labels (in any order).
    pub fn add_model_for_windows<T, S: Scalar>(
        &mut self,
        name: &str,
        windows: &[Window<T>],
        scores: &[S],
    ) -> Result<(), EvalError> {
        if windows.len() != scores.len() {
            return Err(EvalError::LengthMismatch {
                expected: windows.len(),
                found: scores.len(),
            });
        }
        let keyed = windows.iter().zip(scores).map(|(w, &s)| {
            (
                TestKey {
                    patient_id: w.patient_id().to_string(),
                    label_index: w.label_index(),
                },
                w.label(),
                s.as_f64(),
            )
        });
        self.add_model_keyed(name, keyed)
    }

    /// Adds scores keyed by `(patient, label_index)`; every row must be
    /// covered exactly once and labels must agree.
    pub fn add_model_keyed(
        &mut self,
        name: &str,
        keyed: impl IntoIterator<Item = (TestKey, u8, f64)>,
    ) -> Result<(), EvalError> {
        let index: HashMap<&TestKey, usize> =
            self.keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut scores = vec![f64::NAN; self.len()];
        let mut seen = vec![false; self.len()];
        for (key, label, score) in keyed {
            let &i = index.get(&key).ok_or_else(|| {
                EvalError::UnknownKey(format!("{}@{}", key.patient_id, key.label_index))
            })?;
            if seen[i] {
                return Err(EvalError::DuplicateKey(format!(
                    "{}@{}",
                    key.patient_id, key.label_index
                )));
            }
            if label != self.labels[i] {
                return Err(EvalError::LabelMismatch {
                    patient_id: key.patient_id,
                    label_index: key.label_index,
                });
            }
            seen[i] = true;
            scores[i] = score;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(EvalError::MissingKey(format!(
                "{}@{}",
                self.keys[i].patient_id, self.keys[i].label_index
            )));
        }
        self.push_model(name, scores)
    }

    /// Adds scores already in this set's row order.
    pub fn add_model_in_order(&mut self, name: &str, scores: Vec<f64>) -> Result<(), EvalError> {
        if scores.len() != self.len() {
            return Err(EvalError::LengthMismatch {
                expected: self.len(),
                found: scores.len(),
            });
        }
        self.push_model(name, scores)
    }

    pub fn model(&self, name: &str) -> Option<&ModelScores> {
        self.models.iter().find(|m| m.name == name)
    }
}
