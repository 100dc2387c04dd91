//! Patient-stratified circular moving-block bootstrap of AUC-PRG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ks::{ks_normal, KsResult};
use super::prg::auc_prg_of;
use super::testset::ScoredTestSet;
use super::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
    #[serde(default)]
    pub seed: u64,
    /// Two-sided level of the percentile interval.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Redraws allowed per resample when one class is missing.
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
}

fn default_resamples() -> usize {
    2000
}
fn default_block_len() -> usize {
    10
}
fn default_alpha() -> f64 {
    0.05
}
fn default_max_retries() -> usize {
    100
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: default_resamples(),
            block_len: default_block_len(),
            seed: 0,
            alpha: default_alpha(),
            max_retries: default_max_retries(),
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.resamples == 0 || self.block_len == 0 {
            return Err(EvalError::InvalidConfig(
                "resamples and block_len must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBootstrap {
    pub name: String,
    pub point_estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// False when the percentile interval misses the full-sample estimate.
    pub ci_contains_point: bool,
    pub ks: KsResult,
    pub resample_aucs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub candidate: String,
    pub comparator: String,
    pub mean_difference: f64,
    /// One-sided, null hypothesis `AUC(candidate) <= AUC(comparator)`.
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub config: BootstrapConfig,
    pub ci_method: String,
    pub stratification: String,
    pub block_scheme: String,
    /// Total redraws caused by resamples lacking a class.
    pub degenerate_redraws: usize,
    pub models: Vec<ModelBootstrap>,
    pub pairwise: Vec<PairwiseTest>,
}

impl BootstrapReport {
    pub fn model(&self, name: &str) -> Option<&ModelBootstrap> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn pair(&self, candidate: &str, comparator: &str) -> Option<&PairwiseTest> {
        self.pairwise
            .iter()
            .find(|p| p.candidate == candidate && p.comparator == comparator)
    }
}

/// Row indices of one resample: for each patient, circular blocks of
/// `block_len` consecutive rows until the patient's row count is filled.
pub fn resample_indices<R: Rng + ?Sized>(
    ranges: &[std::ops::Range<usize>],
    block_len: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(ranges.last().map(|r| r.end).unwrap_or(0));
    for r in ranges {
        let c = r.len();
        let target = out.len() + c;
        while out.len() < target {
            let start = rng.random_range(0..c);
            for k in 0..block_len.min(target - out.len()) {
                out.push(r.start + (start + k) % c);
            }
        }
    }
    out
}

/// Lower and upper percentile bounds from a sorted sample: the
/// `ceil(B * alpha / 2)`-th smallest and largest values.
pub fn percentile_interval(sorted: &[f64], alpha: f64) -> (f64, f64) {
    let b = sorted.len();
    let k = ((b as f64 * alpha / 2.0).ceil() as usize).clamp(1, b);
    (sorted[k - 1], sorted[b - k])
}

/// `(1 + #{a_i - b_i <= 0}) / (B + 1)`.
pub fn paired_p_value(a: &[f64], b: &[f64]) -> f64 {
    let count = a.iter().zip(b).filter(|(x, y)| *x - *y <= 0.0).count();
    (1 + count) as f64 / (a.len() + 1) as f64
}

pub fn block_bootstrap(
    testset: &ScoredTestSet,
    config: &BootstrapConfig,
) -> Result<BootstrapReport, EvalError> {
    config.validate()?;
    if testset.models.is_empty() {
        return Err(EvalError::NoModels);
    }
    let points: Vec<f64> = testset
        .models
        .iter()
        .map(|m| auc_prg_of(&m.scores, &testset.labels))
        .collect::<Result<_, _>>()?;
    let ranges = testset.patient_ranges();
    let mut resampled: Vec<Vec<f64>> =
        vec![Vec::with_capacity(config.resamples); testset.models.len()];
    let mut redraws = 0;
    let mut labels = vec![0u8; testset.len()];
    let mut scores = vec![0.0; testset.len()];
    for b in 0..config.resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(b as u64);
        let mut attempt = 0;
        let idx = loop {
            let idx = resample_indices(&ranges, config.block_len, &mut rng);
            let pos = idx.iter().filter(|&&i| testset.labels[i] == 1).count();
            if pos > 0 && pos < idx.len() {
                break idx;
            }
            attempt += 1;
            redraws += 1;
            if attempt > config.max_retries {
                return Err(EvalError::DegenerateResample {
                    resample: b,
                    attempts: attempt,
                });
            }
        };
        for (slot, &i) in labels.iter_mut().zip(&idx) {
            *slot = testset.labels[i];
        }
        for (m, out) in testset.models.iter().zip(&mut resampled) {
            for (slot, &i) in scores.iter_mut().zip(&idx) {
                *slot = m.scores[i];
            }
            out.push(auc_prg_of(&scores, &labels)?);
        }
    }

    let models = testset
        .models
        .iter()
        .zip(&points)
        .zip(&resampled)
        .map(|((m, &point), aucs)| {
            let mut sorted = aucs.clone();
            sorted.sort_by(f64::total_cmp);
            let (lo, hi) = percentile_interval(&sorted, config.alpha);
            ModelBootstrap {
                name: m.name.clone(),
                point_estimate: point,
                ci_lower: lo,
                ci_upper: hi,
                ci_contains_point: lo <= point && point <= hi,
                ks: ks_normal(aucs),
                resample_aucs: aucs.clone(),
            }
        })
        .collect();

    let mut pairwise = Vec::new();
    for (i, a) in testset.models.iter().enumerate() {
        for (j, b) in testset.models.iter().enumerate() {
            if i == j {
                continue;
            }
            let (ra, rb) = (&resampled[i], &resampled[j]);
            let mean_difference =
                ra.iter().zip(rb).map(|(x, y)| x - y).sum::<f64>() / ra.len() as f64;
            pairwise.push(PairwiseTest {
                candidate: a.name.clone(),
                comparator: b.name.clone(),
                mean_difference,
                p_value: paired_p_value(ra, rb),
            });
        }
    }

    Ok(BootstrapReport {
        config: config.clone(),
        ci_method: "percentile".into(),
        stratification: "patient".into(),
        block_scheme: "circular moving block".into(),
        degenerate_redraws: redraws,
        models,
        pairwise,
    })
}
