use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::TuneError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    /// Integers in `[low, high]`, both ends included.
    Int,
    Uniform,
    /// Uniform in `log10`.
    LogUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub name: String,
    pub kind: DimensionKind,
    pub low: f64,
    pub high: f64,
}

impl Dimension {
    pub fn int(name: &str, low: i64, high: i64) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::Int,
            low: low as f64,
            high: high as f64,
        }
    }

    pub fn uniform(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::Uniform,
            low,
            high,
        }
    }

    pub fn log_uniform(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            kind: DimensionKind::LogUniform,
            low,
            high,
        }
    }

    /// Coordinates in which sampling is uniform.
    pub(crate) fn to_internal(&self, value: f64) -> f64 {
        match self.kind {
            DimensionKind::LogUniform => value.log10(),
            _ => value,
        }
    }

    pub(crate) fn from_internal(&self, x: f64) -> f64 {
        let v = match self.kind {
            DimensionKind::LogUniform => 10f64.powf(x),
            DimensionKind::Int => x.round(),
            DimensionKind::Uniform => x,
        };
        v.clamp(self.low, self.high)
    }

    pub(crate) fn internal_bounds(&self) -> (f64, f64) {
        (self.to_internal(self.low), self.to_internal(self.high))
    }

    fn validate(&self) -> Result<(), TuneError> {
        let bad = |m: &str| Err(TuneError::InvalidSpace(format!("`{}`: {m}", self.name)));
        if !(self.low.is_finite() && self.high.is_finite()) || self.low > self.high {
            return bad("bounds must be finite with low <= high");
        }
        match self.kind {
            DimensionKind::Int if self.low.fract() != 0.0 || self.high.fract() != 0.0 => {
                bad("integer bounds must be whole numbers")
            }
            DimensionKind::LogUniform if self.low <= 0.0 => {
                bad("log-uniform bounds must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self, TuneError> {
        let space = Self { dimensions };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        if self.dimensions.is_empty() {
            return Err(TuneError::InvalidSpace("no dimensions".into()));
        }
        let mut seen = HashSet::new();
        for d in &self.dimensions {
            d.validate()?;
            if !seen.insert(d.name.as_str()) {
                return Err(TuneError::InvalidSpace(format!(
                    "duplicate dimension `{}`",
                    d.name
                )));
            }
        }
        Ok(())
    }

    /// Recurrent classifier: hidden units 10-100, 1-4 layers, dropout
    /// 0.1-0.5, L2 1e-6-1e-3 and 10-100 epochs.
    pub fn rnn() -> Self {
        Self {
            dimensions: vec![
                Dimension::int("hidden", 10, 100),
                Dimension::int("layers", 1, 4),
                Dimension::uniform("dropout", 0.1, 0.5),
                Dimension::log_uniform("l2", 1e-6, 1e-3),
                Dimension::int("epochs", 10, 100),
            ],
        }
    }

    /// Feed-forward baseline with one or two equally wide hidden layers.
    pub fn ffnn() -> Self {
        Self {
            dimensions: vec![
                Dimension::int("hidden", 10, 100),
                Dimension::int("layers", 1, 2),
                Dimension::uniform("dropout", 0.1, 0.5),
                Dimension::log_uniform("l2", 1e-6, 1e-3),
                Dimension::int("epochs", 10, 100),
            ],
        }
    }

    pub fn logistic() -> Self {
        Self {
            dimensions: vec![
                Dimension::log_uniform("l2", 1e-6, 1e-2),
                Dimension::int("epochs", 10, 100),
            ],
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dimensions.iter().map(|d| d.name.as_str())
    }
}

/// One point of a search space, in the original (not log) coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSample {
    pub values: Vec<(String, f64)>,
}

impl ParamSample {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// The value of `name`, or an error naming the missing dimension.
    pub fn require(&self, name: &str) -> Result<f64, TuneError> {
        self.get(name)
            .ok_or_else(|| TuneError::InvalidSpace(format!("sample has no `{name}` dimension")))
    }

    pub(crate) fn raw(&self) -> Vec<f64> {
        self.values.iter().map(|(_, v)| *v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spaces_are_valid() {
        for s in [
            SearchSpace::rnn(),
            SearchSpace::ffnn(),
            SearchSpace::logistic(),
        ] {
            s.validate().unwrap();
        }
        let rnn = SearchSpace::rnn();
        assert_eq!(
            rnn.names().collect::<Vec<_>>(),
            ["hidden", "layers", "dropout", "l2", "epochs"]
        );
        assert_eq!(rnn.dimensions[3].low, 1e-6);
        assert_eq!(rnn.dimensions[3].high, 1e-3);
    }

    #[test]
    fn bad_dimensions_rejected() {
        for d in [
            Dimension::uniform("a", 1.0, 0.0),
            Dimension::log_uniform("b", 0.0, 1.0),
            Dimension {
                name: "c".into(),
                kind: DimensionKind::Int,
                low: 0.5,
                high: 3.0,
            },
        ] {
            assert!(SearchSpace::new(vec![d]).is_err());
        }
        let dup = vec![Dimension::int("x", 0, 1), Dimension::int("x", 0, 2)];
        assert!(SearchSpace::new(dup).is_err());
        assert!(SearchSpace::new(vec![]).is_err());
    }

    #[test]
    fn internal_round_trip() {
        let d = Dimension::log_uniform("l2", 1e-6, 1e-3);
        let x = d.to_internal(3e-5);
        assert!((d.from_internal(x) - 3e-5).abs() < 1e-18);
        let i = Dimension::int("h", 10, 100);
        assert_eq!(i.from_internal(42.4), 42.0);
        assert_eq!(i.from_internal(140.0), 100.0);
    }
}
