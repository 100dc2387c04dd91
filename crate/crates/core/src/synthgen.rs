//! Synthetic patient cohorts with a planted temporal signal.
//!
//! Each patient carries a latent AR(1) risk state. Dynamic features are noisy
//! continuous views of that state, binary instrument items obtained by
//! thresholding it, and unrelated AR(1) distractors. The daily event follows a
//! logistic hazard in the current latent state, the previous day's views, a few
//! informative statics and a self-excitation term that is active while an event
//! occurred within the last `history_days` days. An optional refractory term
//! lowers the hazard on the days right after an event, so the excitation can
//! only be read from history longer than one day. The true event probability
//! of every day is returned next to the cohort.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::cohort::{Cohort, CohortError, Feature, FeatureKind, FeatureSchema, PatientRecord};
use crate::preprocess::segment_source_id;
use crate::windowing::Window;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("no oracle probability for {patient_id} on {date}")]
    Alignment { patient_id: String, date: NaiveDate },
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Lognormal series lengths, redrawn until they fall in `[min, max]`. The
/// moments describe the truncated distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthConfig {
    pub mean: f64,
    pub sd: f64,
    pub min: usize,
    pub max: usize,
}

impl Default for LengthConfig {
    fn default() -> Self {
        Self {
            mean: 140.0,
            sd: 106.0,
            min: 30,
            max: 600,
        }
    }
}

impl LengthConfig {
    /// `(mu, sigma)` of the underlying normal chosen so that the lognormal,
    /// truncated to `[min, max]`, has the configured mean and sd. Falls back
    /// to plain moment matching when the truncated fit does not converge.
    pub fn lognormal_params(&self) -> (f64, f64) {
        let (mut m, mut s) = (self.mean, self.sd);
        let mut best = untruncated_params(m, s);
        for _ in 0..200 {
            let (mu, sigma) = untruncated_params(m, s);
            let Some((tm, ts)) = truncated_moments(mu, sigma, self.min as f64, self.max as f64)
            else {
                break;
            };
            best = (mu, sigma);
            let (em, es) = (self.mean - tm, self.sd - ts);
            if em.abs() < 1e-6 * self.mean && es.abs() < 1e-6 * self.mean.max(self.sd) {
                break;
            }
            m = (m + em).max(1e-9);
            s = (s + es).max(0.0);
        }
        best
    }
}

fn untruncated_params(mean: f64, sd: f64) -> (f64, f64) {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    (mean.ln() - s2 / 2.0, s2.sqrt())
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mean and sd of a lognormal restricted to `[a, b]`.
fn truncated_moments(mu: f64, sigma: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    if sigma == 0.0 {
        return Some((mu.exp(), 0.0));
    }
    let (la, lb) = (a.ln(), b.ln());
    let mass = |k: f64| {
        let shift = mu + k * sigma * sigma;
        std_normal_cdf((lb - shift) / sigma) - std_normal_cdf((la - shift) / sigma)
    };
    let z = mass(0.0);
    if !(z > 1e-12) {
        return None;
    }
    let m1 = (mu + sigma * sigma / 2.0).exp() * mass(1.0) / z;
    let m2 = (2.0 * mu + 2.0 * sigma * sigma).exp() * mass(2.0) / z;
    let var = m2 - m1 * m1;
    (var >= 0.0 && m1.is_finite()).then(|| (m1, var.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardConfig {
    /// Baseline logit.
    pub intercept: f64,
    /// Added to the logit while an event happened in the last `history_days`.
    pub self_excitation: f64,
    pub history_days: usize,
    /// Added to the logit on the `refractory_days` days right after an event;
    /// a negative value makes events rarely fall on consecutive days.
    #[serde(default)]
    pub refractory: f64,
    #[serde(default = "default_refractory_days")]
    pub refractory_days: usize,
    /// Weight of the current latent state.
    pub state_weight: f64,
    /// Weight of the mean of the previous day's continuous views.
    pub view_weight: f64,
    /// Weight of the scaled sum of informative statics.
    pub static_weight: f64,
    #[serde(default)]
    pub seasonal_amplitude: f64,
    #[serde(default = "default_period")]
    pub seasonal_period: f64,
    /// Logit change per 100 days since the patient's first day.
    #[serde(default)]
    pub drift: f64,
}

fn default_period() -> f64 {
    365.25
}

fn default_refractory_days() -> usize {
    1
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            intercept: -5.2,
            self_excitation: 3.0,
            history_days: 7,
            refractory: -5.0,
            refractory_days: default_refractory_days(),
            state_weight: 1.5,
            view_weight: 0.0,
            static_weight: 0.3,
            seasonal_amplitude: 0.0,
            seasonal_period: default_period(),
            drift: 0.0,
        }
    }
}

impl HazardConfig {
    /// Constant hazard `sigmoid(intercept)`.
    pub fn no_signal(rate: f64) -> Self {
        Self {
            intercept: (rate / (1.0 - rate)).ln(),
            self_excitation: 0.0,
            refractory: 0.0,
            state_weight: 0.0,
            view_weight: 0.0,
            static_weight: 0.0,
            ..Self::default()
        }
    }

    pub fn has_signal(&self) -> bool {
        [
            self.self_excitation,
            self.refractory,
            self.state_weight,
            self.view_weight,
            self.static_weight,
            self.seasonal_amplitude,
            self.drift,
        ]
        .iter()
        .any(|&w| w != 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_patients: usize,
    pub lengths: LengthConfig,
    pub n_static: usize,
    pub n_dynamic: usize,
    /// Binary instrument items among the dynamic features (first in order).
    pub n_instrument_items: usize,
    /// Continuous noisy views of the latent state (after the items).
    pub n_state_views: usize,
    /// Statics that enter the hazard (first in order).
    pub n_informative_static: usize,
    /// AR(1) coefficient of the latent state, which has unit variance.
    pub state_persistence: f64,
    pub view_noise: f64,
    pub hazard: HazardConfig,
    /// Probability that a dynamic value is left empty.
    #[serde(default)]
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_patients: 83,
            lengths: LengthConfig::default(),
            n_static: 40,
            n_dynamic: 74,
            n_instrument_items: 7,
            n_state_views: 6,
            n_informative_static: 4,
            state_persistence: 0.97,
            view_noise: 3.0,
            hazard: HazardConfig::default(),
            missing_rate: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        let l = &self.lengths;
        if !(l.mean > 0.0 && l.sd >= 0.0) || l.min == 0 || l.min > l.max {
            return bad(format!(
                "length distribution needs mean > 0, sd >= 0 and 1 <= min <= max (got {l:?})"
            ));
        }
        if self.n_instrument_items + self.n_state_views > self.n_dynamic {
            return bad(format!(
                "{} instrument items and {} views do not fit in {} dynamic features",
                self.n_instrument_items, self.n_state_views, self.n_dynamic
            ));
        }
        if self.n_informative_static > self.n_static {
            return bad("more informative statics than statics".into());
        }
        if !(0.0..1.0).contains(&self.state_persistence) {
            return bad("state_persistence must lie in [0, 1)".into());
        }
        if !(self.view_noise >= 0.0) {
            return bad("view_noise must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing_rate must lie in [0, 1)".into());
        }
        if self.hazard.history_days == 0 && self.hazard.self_excitation != 0.0 {
            return bad("history_days must be positive when self_excitation is set".into());
        }
        if !(self.hazard.seasonal_period > 0.0) {
            return bad("seasonal_period must be positive".into());
        }
        Ok(())
    }

    pub fn schema(&self) -> FeatureSchema {
        let mut dynamic = Vec::with_capacity(self.n_dynamic);
        for k in 0..self.n_instrument_items {
            dynamic.push(Feature::new(format!("item_{}", k + 1), FeatureKind::Binary));
        }
        for k in 0..self.n_state_views {
            dynamic.push(Feature::new(
                format!("view_{}", k + 1),
                FeatureKind::Continuous,
            ));
        }
        for k in 0..self.n_dynamic - self.n_instrument_items - self.n_state_views {
            dynamic.push(Feature::new(
                format!("noise_{}", k + 1),
                FeatureKind::Continuous,
            ));
        }
        let mut statics = Vec::with_capacity(self.n_static);
        for k in 0..self.n_informative_static {
            statics.push(Feature::new(
                format!("risk_{}", k + 1),
                FeatureKind::Continuous,
            ));
        }
        for k in 0..self.n_static - self.n_informative_static {
            let kind = if k % 2 == 0 {
                FeatureKind::Binary
            } else {
                FeatureKind::Continuous
            };
            statics.push(Feature::new(format!("static_{}", k + 1), kind));
        }
        FeatureSchema::new(dynamic, statics).expect("generated names are unique")
    }

    /// Names of the instrument items, for building a summed-score baseline.
    pub fn instrument_items(&self) -> Vec<String> {
        (0..self.n_instrument_items)
            .map(|k| format!("item_{}", k + 1))
            .collect()
    }
}

/// True daily event probabilities, per patient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Oracle {
    probs: HashMap<(String, NaiveDate), f64>,
}

impl Oracle {
    pub fn insert(&mut self, patient_id: &str, date: NaiveDate, prob: f64) {
        self.probs.insert((patient_id.to_string(), date), prob);
    }

    pub fn get(&self, patient_id: &str, date: NaiveDate) -> Option<f64> {
        self.probs.get(&(patient_id.to_string(), date)).copied()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Writes `patient_id,date,true_prob`, sorted by patient then date.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SynthError> {
        let mut rows: Vec<_> = self.probs.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["patient_id", "date", "true_prob"])?;
        for ((pid, date), p) in rows {
            w.write_record([
                pid.as_str(),
                &date.format("%Y-%m-%d").to_string(),
                &p.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SynthError> {
        #[derive(Deserialize)]
        struct Row {
            patient_id: String,
            date: NaiveDate,
            true_prob: f64,
        }
        let mut oracle = Self::default();
        for row in csv::Reader::from_reader(input).deserialize::<Row>() {
            let row = row?;
            oracle.insert(&row.patient_id, row.date, row.true_prob);
        }
        Ok(oracle)
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    pub oracle: Oracle,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn sample_length(cfg: &LengthConfig, rng: &mut ChaCha8Rng) -> usize {
    if cfg.sd == 0.0 {
        return (cfg.mean.round() as usize).clamp(cfg.min, cfg.max);
    }
    let (mu, sigma) = cfg.lognormal_params();
    let dist = LogNormal::new(mu, sigma).expect("valid lognormal");
    for _ in 0..10_000 {
        let len = dist.sample(rng).round() as usize;
        if (cfg.min..=cfg.max).contains(&len) {
            return len;
        }
    }
    cfg.mean.round().clamp(cfg.min as f64, cfg.max as f64) as usize
}

fn patient_rng(seed: u64, patient: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(patient as u64 + 1);
    rng
}

/// Simulates one patient; returns the record and the daily probabilities.
fn simulate_patient(cfg: &GenConfig, index: usize) -> (PatientRecord, Vec<f64>) {
    let mut rng = patient_rng(cfg.seed, index);
    let tp = sample_length(&cfg.lengths, &mut rng);
    let start = NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date")
        + chrono::Days::new(rng.random_range(0..730));
    let h = &cfg.hazard;

    let statics: Vec<f64> = (0..cfg.n_static)
        .map(|k| {
            if k >= cfg.n_informative_static && (k - cfg.n_informative_static) % 2 == 0 {
                f64::from(rng.random_bool(0.4) as u8)
            } else {
                normal(&mut rng)
            }
        })
        .collect();
    let static_term = if cfg.n_informative_static > 0 {
        statics[..cfg.n_informative_static].iter().sum::<f64>()
            / (cfg.n_informative_static as f64).sqrt()
    } else {
        0.0
    };

    let phi = cfg.state_persistence;
    let innov = (1.0 - phi * phi).sqrt();
    let mut state = normal(&mut rng);
    let thresholds: Vec<f64> = (0..cfg.n_instrument_items)
        .map(|k| 0.6 + 0.15 * k as f64)
        .collect();
    let n_distractor = cfg.n_dynamic - cfg.n_instrument_items - cfg.n_state_views;
    let mut distractors: Vec<f64> = (0..n_distractor).map(|_| normal(&mut rng)).collect();

    let mut dynamics: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(tp); cfg.n_dynamic];
    let mut events: Vec<Option<u8>> = Vec::with_capacity(tp);
    let mut probs = Vec::with_capacity(tp);
    let mut last_event: Option<usize> = None;
    let mut prev_view_mean = 0.0;
    for t in 0..tp {
        if t > 0 {
            state = phi * state + innov * normal(&mut rng);
        }
        let excited = last_event.is_some_and(|e| t - e <= h.history_days);
        let refractory = last_event.is_some_and(|e| t - e <= h.refractory_days);
        let logit = h.intercept
            + h.state_weight * state
            + h.view_weight * prev_view_mean
            + h.static_weight * static_term
            + if excited { h.self_excitation } else { 0.0 }
            + if refractory { h.refractory } else { 0.0 }
            + h.seasonal_amplitude
                * (2.0 * std::f64::consts::PI * t as f64 / h.seasonal_period).sin()
            + h.drift * t as f64 / 100.0;
        let p = sigmoid(logit);
        let y = rng.random_bool(p);
        if y {
            last_event = Some(t);
        }
        events.push(Some(y as u8));
        probs.push(p);

        let mut col = 0;
        for &thr in &thresholds {
            let v = f64::from((state + cfg.view_noise * normal(&mut rng) > thr) as u8);
            dynamics[col].push(Some(v));
            col += 1;
        }
        let mut view_sum = 0.0;
        for _ in 0..cfg.n_state_views {
            let v = state + cfg.view_noise * normal(&mut rng);
            view_sum += v;
            dynamics[col].push(Some(v));
            col += 1;
        }
        prev_view_mean = if cfg.n_state_views > 0 {
            view_sum / cfg.n_state_views as f64
        } else {
            0.0
        };
        for d in &mut distractors {
            *d = 0.8 * *d + 0.6 * normal(&mut rng);
            dynamics[col].push(Some(*d));
            col += 1;
        }
    }
    if cfg.missing_rate > 0.0 {
        for series in &mut dynamics {
            for v in series.iter_mut() {
                if rng.random_bool(cfg.missing_rate) {
                    *v = None;
                }
            }
            if series.iter().all(Option::is_none) {
                // keep at least one observation so the column can be imputed
                let i = rng.random_range(0..tp);
                series[i] = Some(0.0);
            }
        }
    }
    let record = PatientRecord {
        patient_id: format!("P{:03}", index + 1),
        timestamps: (0..tp)
            .map(|t| start + chrono::Days::new(t as u64))
            .collect(),
        events,
        dynamics,
        statics,
    };
    (record, probs)
}

pub fn generate_cohort(cfg: &GenConfig) -> Result<SyntheticCohort, SynthError> {
    cfg.validate()?;
    let mut oracle = Oracle::default();
    let mut patients = Vec::with_capacity(cfg.n_patients);
    for i in 0..cfg.n_patients {
        let (rec, probs) = simulate_patient(cfg, i);
        for (d, p) in rec.timestamps.iter().zip(&probs) {
            oracle.insert(&rec.patient_id, *d, *p);
        }
        patients.push(rec);
    }
    Ok(SyntheticCohort {
        cohort: Cohort::new(cfg.schema(), patients)?,
        oracle,
    })
}

/// Fraction of observed event days that are positive.
pub fn event_rate(cohort: &Cohort) -> f64 {
    let (mut pos, mut total) = (0usize, 0usize);
    for p in &cohort.patients {
        for e in p.events.iter().flatten() {
            total += 1;
            pos += usize::from(*e);
        }
    }
    pos as f64 / total.max(1) as f64
}

/// The oracle probability of each window's label day. Segment ids produced by
/// preprocessing are mapped back to their source patient.
pub fn bayes_scores<T>(oracle: &Oracle, windows: &[Window<T>]) -> Result<Vec<f64>, SynthError> {
    windows
        .iter()
        .map(|w| {
            let pid = segment_source_id(w.patient_id());
            let date = w.label_date();
            oracle.get(pid, date).ok_or_else(|| SynthError::Alignment {
                patient_id: pid.to_string(),
                date,
            })
        })
        .collect()
}

/// Bisects the hazard intercept until the simulated event rate is within
/// `tolerance` of `target`. The search is deterministic for a fixed seed.
pub fn calibrate_intercept(
    cfg: &GenConfig,
    target: f64,
    tolerance: f64,
) -> Result<f64, SynthError> {
    cfg.validate()?;
    if !(0.0 < target && target < 1.0) {
        return Err(SynthError::Config(format!(
            "target rate {target} outside (0, 1)"
        )));
    }
    let (mut lo, mut hi) = (-15.0, 5.0);
    let mut trial = cfg.clone();
    let mut best = cfg.hazard.intercept;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        trial.hazard.intercept = mid;
        let rate = event_rate(&generate_cohort(&trial)?.cohort);
        best = mid;
        if (rate - target).abs() <= tolerance {
            break;
        }
        if rate < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
