//! Random search and a univariate tree-structured Parzen estimator.
//!
//! The estimator splits the finished trials at the `gamma` quantile of their
//! objectives, fits one Parzen density per dimension to the better group and
//! one to the rest, draws candidates from the better density and keeps the
//! candidate with the largest density ratio. Dimensions are treated
//! independently. While fewer than `warmup` trials exist, or when every
//! objective is identical so that the split carries no information, it falls
//! back to sampling the prior (plain random search).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::space::{Dimension, DimensionKind, ParamSample, SearchSpace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    #[default]
    Tpe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpeSettings {
    pub gamma: f64,
    pub warmup: usize,
    pub candidates: usize,
    /// Weight of the uniform prior inside each Parzen mixture.
    pub prior_weight: f64,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            warmup: 20,
            candidates: 24,
            prior_weight: 1.0,
        }
    }
}

/// A finished trial as seen by the sampler. Failed trials carry `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub objective: f64,
}

fn draw_dimension(d: &Dimension, rng: &mut ChaCha8Rng) -> f64 {
    if d.low == d.high {
        return d.low;
    }
    match d.kind {
        DimensionKind::Int => rng.random_range(d.low as i64..=d.high as i64) as f64,
        DimensionKind::Uniform => rng.random_range(d.low..d.high),
        DimensionKind::LogUniform => {
            let (lo, hi) = d.internal_bounds();
            d.from_internal(rng.random_range(lo..hi))
        }
    }
}

/// Independent draws from the prior of each dimension.
pub fn sample_random(space: &SearchSpace, rng: &mut ChaCha8Rng) -> ParamSample {
    ParamSample {
        values: space
            .dimensions
            .iter()
            .map(|d| (d.name.clone(), draw_dimension(d, rng)))
            .collect(),
    }
}

pub fn sample_config(
    space: &SearchSpace,
    history: &[Observation],
    strategy: Strategy,
    settings: &TpeSettings,
    rng: &mut ChaCha8Rng,
) -> ParamSample {
    if strategy == Strategy::Random || history.len() < settings.warmup {
        return sample_random(space, rng);
    }
    let mut finished: Vec<&Observation> =
        history.iter().filter(|o| o.objective.is_finite()).collect();
    if finished.len() < 2 {
        return sample_random(space, rng);
    }
    let best = finished
        .iter()
        .map(|o| o.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = finished
        .iter()
        .map(|o| o.objective)
        .fold(f64::INFINITY, f64::min);
    if best == worst {
        return sample_random(space, rng);
    }
    // stable sort keeps earlier trials first among equal objectives
    finished.sort_by(|a, b| b.objective.total_cmp(&a.objective));
    let n_good =
        ((settings.gamma * finished.len() as f64).ceil() as usize).clamp(1, finished.len() - 1);
    let (good, bad) = finished.split_at(n_good);

    let values = space
        .dimensions
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let (lo, hi) = d.internal_bounds();
            let pick = |set: &[&Observation]| -> Vec<f64> {
                set.iter().map(|o| d.to_internal(o.values[k])).collect()
            };
            let l = Parzen::fit(&pick(good), lo, hi, settings.prior_weight);
            let g = Parzen::fit(&pick(bad), lo, hi, settings.prior_weight);
            let mut chosen = None;
            let mut best_ratio = f64::NEG_INFINITY;
            for _ in 0..settings.candidates.max(1) {
                let value = d.from_internal(l.sample(rng));
                let x = d.to_internal(value);
                let ratio = l.ln_density(x) - g.ln_density(x);
                if ratio > best_ratio || chosen.is_none() {
                    best_ratio = ratio;
                    chosen = Some(value);
                }
            }
            (d.name.clone(), chosen.expect("at least one candidate"))
        })
        .collect();
    ParamSample { values }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mixture of a uniform prior on `[lo, hi]` and normals truncated to it.
struct Parzen {
    lo: f64,
    hi: f64,
    centers: Vec<f64>,
    sigma: f64,
    prior_weight: f64,
}

impl Parzen {
    fn fit(points: &[f64], lo: f64, hi: f64, prior_weight: f64) -> Self {
        let width = (hi - lo).max(f64::MIN_POSITIVE);
        let n = points.len() as f64;
        let sd = if points.len() > 1 {
            let mean = points.iter().sum::<f64>() / n;
            (points.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let floor = width / (1.0 + n).min(100.0);
        let sigma = (1.06 * sd * n.powf(-0.2)).clamp(floor, width);
        Self {
            lo,
            hi,
            centers: points.to_vec(),
            sigma,
            prior_weight,
        }
    }

    fn total_weight(&self) -> f64 {
        self.prior_weight + self.centers.len() as f64
    }

    fn ln_density(&self, x: f64) -> f64 {
        let width = self.hi - self.lo;
        let mut dens = if width > 0.0 {
            self.prior_weight / width
        } else {
            0.0
        };
        for &c in &self.centers {
            let mass = std_normal_cdf((self.hi - c) / self.sigma)
                - std_normal_cdf((self.lo - c) / self.sigma);
            let z = (x - c) / self.sigma;
            let pdf = (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt());
            dens += pdf / mass.max(1e-300);
        }
        (dens / self.total_weight()).max(1e-300).ln()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.hi <= self.lo {
            return self.lo;
        }
        let pick = rng.random_range(0.0..self.total_weight());
        if pick < self.prior_weight || self.centers.is_empty() {
            return rng.random_range(self.lo..self.hi);
        }
        let idx = ((pick - self.prior_weight) as usize).min(self.centers.len() - 1);
        let normal = Normal::new(self.centers[idx], self.sigma).expect("positive sigma");
        for _ in 0..100 {
            let x = normal.sample(rng);
            if (self.lo..=self.hi).contains(&x) {
                return x;
            }
        }
        self.centers[idx].clamp(self.lo, self.hi)
    }
}
