//! Experiment configuration read from TOML. Command-line flags override the
//! file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rnnbof::baselines::{FfnnConfig, LogisticConfig, PsychometricSpec};
use rnnbof::evaluation::BootstrapConfig;
use rnnbof::model::{LossWeighting, ModelConfig};
use rnnbof::preprocess::PeriodParams;
use rnnbof::synthgen::GenConfig;
use rnnbof::tuning::{SearchSpace, Strategy, TpeSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rnn,
    Ffnn,
    Logistic,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rnn => "rnn",
            Family::Ffnn => "ffnn",
            Family::Logistic => "logistic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rnn" => Ok(Family::Rnn),
            "ffnn" => Ok(Family::Ffnn),
            "logistic" => Ok(Family::Logistic),
            other => Err(CliError::Config(format!(
                "unknown model family `{other}`; expected rnn, ffnn or logistic"
            ))),
        }
    }

    /// Name of a trained model in reports, e.g. `rnn_n10`.
    pub fn model_name(self, window_len: usize) -> String {
        format!("{}_n{window_len}", self.as_str())
    }
}

/// Cohort files given by the user. Relative paths are resolved against the
/// directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub events: PathBuf,
    pub statics: PathBuf,
    pub schema: PathBuf,
}

/// Settings of the recurrent classifier used when no tuned configuration
/// exists. The input size is taken from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnSettings {
    pub hidden_size: usize,
    pub num_layers: usize,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss_weighting: LossWeighting,
}

impl Default for RnnSettings {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            num_layers: 1,
            dropout_rate: 0.2,
            l2_lambda: 1e-5,
            epochs: 30,
            batch_size: 512,
            learning_rate: 1e-4,
            loss_weighting: LossWeighting::InverseFrequency,
        }
    }
}

impl RnnSettings {
    pub fn model_config(&self, input_dim: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_size: self.hidden_size,
            num_layers: self.num_layers,
            dropout_rate: self.dropout_rate,
            l2_lambda: self.l2_lambda,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
            loss_weighting: self.loss_weighting,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSettings {
    pub iterations: usize,
    pub strategy: Strategy,
    pub tpe: TpeSettings,
    /// Per-family overrides of the default search spaces.
    pub spaces: BTreeMap<Family, SearchSpace>,
}

impl Default for TuningSettings {
    fn default() -> Self {
        Self {
            iterations: 100,
            strategy: Strategy::Tpe,
            tpe: TpeSettings::default(),
            spaces: BTreeMap::new(),
        }
    }
}

impl TuningSettings {
    pub fn space(&self, family: Family) -> SearchSpace {
        self.spaces
            .get(&family)
            .cloned()
            .unwrap_or_else(|| match family {
                Family::Rnn => SearchSpace::rnn(),
                Family::Ffnn => SearchSpace::ffnn(),
                Family::Logistic => SearchSpace::logistic(),
            })
    }
}

/// Bootstrap settings; the seed is the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub block_len: usize,
    pub alpha: f64,
    pub max_retries: usize,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        Self {
            resamples: d.resamples,
            block_len: d.block_len,
            alpha: d.alpha,
            max_retries: d.max_retries,
        }
    }
}

impl BootstrapSettings {
    pub fn config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            resamples: self.resamples,
            block_len: self.block_len,
            seed,
            alpha: self.alpha,
            max_retries: self.max_retries,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Input cohort; when absent the cohort written by `synth` is used.
    pub data: Option<DataPaths>,
    pub synth: Option<GenConfig>,
    pub preprocess: PeriodParams,
    pub test_fraction: f64,
    pub window_lengths: Vec<usize>,
    pub cv_folds: usize,
    pub families: Vec<Family>,
    pub rnn: RnnSettings,
    pub ffnn: FfnnConfig,
    pub logistic: LogisticConfig,
    pub tuning: TuningSettings,
    pub psychometric: Vec<PsychometricSpec>,
    /// Named score files with `patient_id,label_index,score` rows.
    pub external_scores: BTreeMap<String, PathBuf>,
    /// Adds the generator's true probabilities as a `bayes` scorer when the
    /// cohort is synthetic.
    pub include_oracle: bool,
    pub bootstrap: BootstrapSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            data: None,
            synth: None,
            preprocess: PeriodParams::default(),
            test_fraction: 0.2,
            window_lengths: vec![1, 10, 20],
            cv_folds: 5,
            families: vec![Family::Rnn, Family::Ffnn, Family::Logistic],
            rnn: RnnSettings::default(),
            ffnn: FfnnConfig::default(),
            logistic: LogisticConfig::default(),
            tuning: TuningSettings::default(),
            psychometric: Vec::new(),
            external_scores: BTreeMap::new(),
            include_oracle: true,
            bootstrap: BootstrapSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        if let Some(d) = &mut self.data {
            fix(&mut d.events);
            fix(&mut d.statics);
            fix(&mut d.schema);
        }
        for p in self.external_scores.values_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.data.is_none() && self.synth.is_none() {
            return bad("set either [data] (cohort files) or [synth] (generated cohort)".into());
        }
        if self.window_lengths.is_empty() || self.window_lengths.contains(&0) {
            return bad(format!(
                "window_lengths must be a non-empty list of positive lengths, got {:?}",
                self.window_lengths
            ));
        }
        let mut sorted = self.window_lengths.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.window_lengths.len() {
            return bad(format!(
                "window_lengths has duplicates: {:?}",
                self.window_lengths
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            ));
        }
        if self.cv_folds == 0 {
            return bad("cv_folds must be positive".into());
        }
        if self.families.is_empty()
            && self.psychometric.is_empty()
            && self.external_scores.is_empty()
        {
            return bad(
                "nothing to compare: list model families, psychometric specs or external scores"
                    .into(),
            );
        }
        if self.tuning.iterations == 0 {
            return bad("tuning.iterations must be positive".into());
        }
        for (family, space) in &self.tuning.spaces {
            space
                .validate()
                .map_err(|e| CliError::Config(format!("tuning.spaces.{}: {e}", family.as_str())))?;
        }
        self.ffnn
            .validate()
            .map_err(|e| CliError::Config(format!("[ffnn]: {e}")))?;
        self.bootstrap
            .config(self.seed)
            .validate()
            .map_err(|e| CliError::Config(format!("[bootstrap]: {e}")))?;
        if let Some(g) = &self.synth {
            g.validate()
                .map_err(|e| CliError::Config(format!("[synth]: {e}")))?;
        }
        for (name, path) in &self.external_scores {
            if !path.exists() {
                return bad(format!(
                    "external score file for `{name}` not found: {}",
                    path.display()
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    /// The output root is left out so that a rerun elsewhere hashes the same.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
