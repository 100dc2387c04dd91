//! Score-only baselines that sum instrument components recorded on the
//! final day of the window.

use serde::{Deserialize, Serialize};

use super::{BaselineError, Scorer};
use crate::cohort::{FeatureKind, FeatureSchema};
use crate::preprocess::StandardizationStats;
use crate::scalar::Scalar;
use crate::windowing::Window;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub feature: String,
    pub max_score: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsychometricSpec {
    pub name: String,
    pub components: Vec<Component>,
    /// Declared maximum total; must equal the sum of the component maxima.
    pub max_total: u32,
}

impl PsychometricSpec {
    /// Seven binary items, total 0 to 7.
    pub fn dasa(features: &[&str]) -> Result<Self, BaselineError> {
        Self::uniform("dasa", features, 7, 1)
    }

    /// Twenty items scored 0, 1 or 2, total 0 to 40.
    pub fn start(features: &[&str]) -> Result<Self, BaselineError> {
        Self::uniform("start", features, 20, 2)
    }

    fn uniform(
        name: &str,
        features: &[&str],
        count: usize,
        max: u32,
    ) -> Result<Self, BaselineError> {
        if features.len() != count {
            return Err(BaselineError::InvalidConfig(format!(
                "{name} needs {count} components, got {}",
                features.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            components: features
                .iter()
                .map(|f| Component {
                    feature: f.to_string(),
                    max_score: max,
                })
                .collect(),
            max_total: max * count as u32,
        })
    }

    /// Checks the declared total and that every component is a dynamic
    /// feature whose raw kind matches its score range.
    pub fn validate(&self, raw_schema: &FeatureSchema) -> Result<(), BaselineError> {
        let sum: u32 = self.components.iter().map(|c| c.max_score).sum();
        if sum != self.max_total {
            return Err(BaselineError::InvalidConfig(format!(
                "{}: component maxima sum to {sum}, declared {}",
                self.name, self.max_total
            )));
        }
        for c in &self.components {
            let j = raw_schema
                .dynamic_index(&c.feature)
                .ok_or_else(|| BaselineError::MissingComponent(c.feature.clone()))?;
            let ok = match raw_schema.dynamic_features[j].kind {
                FeatureKind::Binary => c.max_score == 1,
                FeatureKind::Ordinal { s_max, zero_based } => zero_based && s_max == c.max_score,
                FeatureKind::Continuous => false,
            };
            if !ok {
                return Err(BaselineError::InvalidConfig(format!(
                    "{}: feature {} does not have the range 0..={}",
                    self.name, c.feature, c.max_score
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsychometricScorer {
    pub spec: PsychometricSpec,
    indices: Vec<usize>,
    /// `(mean, std)` for components that were standardized.
    scaling: Vec<Option<(f64, f64)>>,
}

impl PsychometricScorer {
    /// `schema` is the schema the windows were built with; `stats` undoes any
    /// standardization so the raw item scores are summed.
    pub fn new(
        spec: PsychometricSpec,
        schema: &FeatureSchema,
        stats: Option<&StandardizationStats>,
    ) -> Result<Self, BaselineError> {
        let mut indices = Vec::new();
        let mut scaling = Vec::new();
        for c in &spec.components {
            indices.push(
                schema
                    .dynamic_index(&c.feature)
                    .ok_or_else(|| BaselineError::MissingComponent(c.feature.clone()))?,
            );
            scaling.push(
                stats
                    .and_then(|s| s.get(&c.feature))
                    .filter(|f| !f.constant)
                    .map(|f| (f.mean, f.std)),
            );
        }
        Ok(Self {
            spec,
            indices,
            scaling,
        })
    }

    pub fn score_one<T: Scalar>(&self, window: &Window<T>) -> f64 {
        let row = window.dynamic_row(window.len() - 1);
        self.indices
            .iter()
            .zip(&self.scaling)
            .map(|(&j, s)| {
                let v = row[j].as_f64();
                let raw = match s {
                    Some((mean, std)) => v * std + mean,
                    None => v,
                };
                raw.round()
            })
            .sum()
    }
}

impl<T: Scalar> Scorer<T> for PsychometricScorer {
    fn name(&self) -> &str {
        &self.spec.name
    }

    fn score(&self, windows: &[Window<T>]) -> Result<Vec<T>, BaselineError> {
        if let Some(w) = windows.first() {
            let d = w.num_dynamic();
            if let Some(&j) = self.indices.iter().find(|&&j| j >= d) {
                return Err(BaselineError::DimensionMismatch {
                    expected: j + 1,
                    found: d,
                });
            }
        }
        Ok(windows.iter().map(|w| T::of(self.score_one(w))).collect())
    }
}
