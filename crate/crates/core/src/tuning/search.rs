use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::families::ModelFamily;
use super::sampler::{sample_config, Observation, Strategy, TpeSettings};
use super::space::{DimensionKind, ParamSample, SearchSpace};
use super::TuneError;
use crate::evaluation::auc_prg_of;
use crate::scalar::Scalar;
use crate::windowing::{CvFolds, Window};

/// Stream of the trial seed used for drawing the trial's configuration; the
/// model itself uses the low streams of the same seed.
const SAMPLER_STREAM: u64 = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    pub iterations: usize,
    #[serde(default)]
    pub strategy: Strategy,
    pub seed: u64,
    #[serde(default)]
    pub tpe: TpeSettings,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            iterations: 100,
            strategy: Strategy::Tpe,
            seed: 0,
            tpe: TpeSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// Master seed plus trial index.
    pub seed: u64,
    pub params: ParamSample,
    /// Validation AUC-PRG per fold; empty for a failed trial.
    pub fold_scores: Vec<f64>,
    /// Mean of `fold_scores`, or `-inf` for a failed trial.
    pub objective: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

impl Trial {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<C> {
    pub family: String,
    pub space: SearchSpace,
    pub settings: SearchSettings,
    pub trials: Vec<Trial>,
    /// Configuration of every trial, `None` where it could not be built.
    pub configs: Vec<Option<C>>,
}

/// Serializable record of the winning trial, consumed by the training step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestConfig<C> {
    pub family: String,
    pub trial: usize,
    pub seed: u64,
    pub objective: f64,
    pub fold_scores: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub config: C,
}

impl<C: Clone> SearchOutcome<C> {
    /// Index of the trial with the highest mean objective; ties go to the
    /// earliest trial. `None` when every trial failed.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, t) in self.trials.iter().enumerate() {
            if !t.objective.is_finite() {
                continue;
            }
            if best.is_none_or(|b| t.objective > self.trials[b].objective) {
                best = Some(i);
            }
        }
        best
    }

    pub fn best(&self) -> Option<BestConfig<C>> {
        let i = self.best_index()?;
        let t = &self.trials[i];
        Some(BestConfig {
            family: self.family.clone(),
            trial: t.index,
            seed: t.seed,
            objective: t.objective,
            fold_scores: t.fold_scores.clone(),
            params: t.params.values.iter().cloned().collect(),
            config: self.configs[i].clone()?,
        })
    }

    /// Trial log with header `trial,<dimensions>,fold1..foldk,mean,seconds`.
    /// With `with_timing` off the seconds column is left empty so that the
    /// file is reproducible byte for byte.
    pub fn write_trial_log<W: Write>(&self, out: W, with_timing: bool) -> Result<(), TuneError> {
        let k = self
            .trials
            .iter()
            .map(|t| t.fold_scores.len())
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["trial".to_string()];
        header.extend(self.space.names().map(String::from));
        header.extend((1..=k).map(|i| format!("fold{i}")));
        header.push("mean".into());
        header.push("seconds".into());
        w.write_record(&header)?;
        for t in &self.trials {
            let mut row = vec![t.index.to_string()];
            for (d, (_, v)) in self.space.dimensions.iter().zip(&t.params.values) {
                row.push(match d.kind {
                    DimensionKind::Int => format!("{}", *v as i64),
                    _ => v.to_string(),
                });
            }
            for i in 0..k {
                row.push(t.fold_scores.get(i).map(f64::to_string).unwrap_or_default());
            }
            row.push(t.objective.to_string());
            row.push(if with_timing {
                format!("{:.3}", t.seconds)
            } else {
                String::new()
            });
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn check_folds<T>(folds: &CvFolds<T>) -> Result<(), TuneError> {
    if folds.folds.is_empty() {
        return Err(TuneError::InvalidFolds("no folds".into()));
    }
    for (i, f) in folds.folds.iter().enumerate() {
        if f.train.is_empty() || f.validation.is_empty() {
            return Err(TuneError::InvalidFolds(format!(
                "fold {} has an empty pool",
                i + 1
            )));
        }
        let pos = f.validation.iter().filter(|w| w.label() == 1).count();
        if pos == 0 || pos == f.validation.len() {
            return Err(TuneError::InvalidFolds(format!(
                "validation pool of fold {} has {pos} positives out of {}",
                i + 1,
                f.validation.len()
            )));
        }
    }
    Ok(())
}

fn evaluate_trial<T: Scalar, F: ModelFamily<T>>(
    family: &F,
    config: &F::Config,
    folds: &CvFolds<T>,
) -> Result<Vec<f64>, TuneError> {
    folds
        .folds
        .iter()
        .map(|fold| {
            let scorer = family.train(config, &fold.train)?;
            let scores: Vec<f64> = scorer
                .score(&fold.validation)?
                .into_iter()
                .map(Scalar::as_f64)
                .collect();
            let labels: Vec<u8> = fold.validation.iter().map(Window::label).collect();
            Ok(auc_prg_of(&scores, &labels)?)
        })
        .collect()
}

/// Runs `settings.iterations` trials. Each trial trains on every fold's
/// training pools and is scored by the mean validation AUC-PRG. Trials that
/// fail are logged with `-inf` and the search carries on. Refitting the best
/// configuration on the full training set is left to the caller.
pub fn run_search<T: Scalar, F: ModelFamily<T>>(
    space: &SearchSpace,
    folds: &CvFolds<T>,
    family: &F,
    settings: &SearchSettings,
) -> Result<SearchOutcome<F::Config>, TuneError> {
    space.validate()?;
    if settings.iterations == 0 {
        return Err(TuneError::InvalidSettings(
            "iterations must be positive".into(),
        ));
    }
    if !(0.0 < settings.tpe.gamma && settings.tpe.gamma < 1.0) {
        return Err(TuneError::InvalidSettings(
            "gamma must lie in (0, 1)".into(),
        ));
    }
    check_folds(folds)?;

    let mut trials = Vec::with_capacity(settings.iterations);
    let mut configs = Vec::with_capacity(settings.iterations);
    let mut history: Vec<Observation> = Vec::with_capacity(settings.iterations);
    for index in 0..settings.iterations {
        let seed = settings.seed.wrapping_add(index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SAMPLER_STREAM);
        let params = sample_config(space, &history, settings.strategy, &settings.tpe, &mut rng);
        let start = Instant::now();
        let config = family.configure(&params, seed);
        let result = match &config {
            Ok(cfg) => evaluate_trial(family, cfg, folds),
            Err(e) => Err(TuneError::Training(e.to_string())),
        };
        let (fold_scores, objective, error) = match result {
            Ok(scores) => {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                (scores, mean, None)
            }
            Err(e) => (Vec::new(), f64::NEG_INFINITY, Some(e.to_string())),
        };
        history.push(Observation {
            values: params.raw(),
            objective,
        });
        trials.push(Trial {
            index,
            seed,
            params,
            fold_scores,
            objective,
            seconds: start.elapsed().as_secs_f64(),
            error,
        });
        configs.push(config.ok());
    }
    Ok(SearchOutcome {
        family: family.name().to_string(),
        space: space.clone(),
        settings: settings.clone(),
        trials,
        configs,
    })
}
