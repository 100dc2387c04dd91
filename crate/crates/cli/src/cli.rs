use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Context};
use crate::config::{ExperimentConfig, Family};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "rnnbof",
    version,
    about = "Global recurrent binary outcome forecasting pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    pub config: PathBuf,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root; overrides the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Restrict window, tune and train to one window length.
    #[arg(long, global = true)]
    pub window_len: Option<usize>,
    /// Restrict tune and train to one model family (rnn, ffnn, logistic).
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Extra external scorer as NAME=PATH; may be repeated.
    #[arg(long = "external-scores", global = true)]
    pub external_scores: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and its oracle probabilities.
    Synth,
    /// Clean, impute and standardize the cohort.
    Preprocess,
    /// Write train and test window dumps for each window length.
    Window,
    /// Search hyperparameters over expanding cross-validation folds.
    Tune,
    /// Fit models on the full training windows.
    Train,
    /// Score the test windows with every configured scorer.
    Evaluate,
    /// Bootstrap the scores and write the comparison report.
    Compare,
}

impl Cli {
    /// The configuration after applying command-line overrides.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        for spec in &self.external_scores {
            let (name, path) = commands::parse_external(spec)?;
            cfg.external_scores.insert(name, path);
        }
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context::new(cli.experiment()?)?;
    let family = cli.family.as_deref().map(Family::parse).transpose()?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&ctx).map(drop),
        Command::Preprocess => commands::cmd_preprocess(&ctx).map(drop),
        Command::Window => commands::cmd_window(&ctx, cli.window_len).map(drop),
        Command::Tune => commands::cmd_tune(&ctx, family, cli.window_len).map(drop),
        Command::Train => commands::cmd_train(&ctx, family, cli.window_len).map(drop),
        Command::Evaluate => commands::cmd_evaluate(&ctx).map(drop),
        Command::Compare => commands::cmd_compare(&ctx).map(drop),
    }
}
