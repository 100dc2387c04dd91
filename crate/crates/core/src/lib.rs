//! Global binary outcome forecasting over populations of patient time series.
//!
//! A single recurrent classifier is trained on fixed-length windows pooled
//! across patients and compared against logistic regression, a feed-forward
//! network, summed instrument scores and external scorers with the area under
//! the precision-recall-gain curve and a patient-stratified block bootstrap.
//!
//! The numeric core is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! cohort ingestion and evaluation metrics work in `f64`.

pub mod baselines;
pub mod cohort;
pub mod evaluation;
pub mod model;
pub mod preprocess;
pub mod scalar;
pub mod synthgen;
pub mod tuning;
pub mod windowing;

/// Version of this library, recorded in experiment provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Recurrent classifier in double precision.
pub type RnnModel = model::TrainedModel<f64>;
/// Recurrent classifier in single precision.
pub type RnnModelF32 = model::TrainedModel<f32>;
pub type RnnParams = model::ModelParams<f64>;
pub type RnnParamsF32 = model::ModelParams<f32>;
pub type Window = windowing::Window<f64>;
pub type WindowF32 = windowing::Window<f32>;
pub type LogisticModel = baselines::LogisticModel<f64>;
pub type LogisticModelF32 = baselines::LogisticModel<f32>;
pub type FfnnModel = baselines::FfnnModel<f64>;
pub type FfnnModelF32 = baselines::FfnnModel<f32>;
