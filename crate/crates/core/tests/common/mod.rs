#![allow(dead_code)]

use std::sync::Arc;

use chrono::NaiveDate;
use rnnbof::cohort::PatientRecord;
use rnnbof::windowing::{build_windows, PatientSeries, Window};

pub fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(i as u64)
}

/// A fully observed record; `dynamics` is feature-major.
pub fn record(id: &str, events: &[u8], dynamics: &[Vec<f64>], statics: &[f64]) -> PatientRecord {
    PatientRecord {
        patient_id: id.to_string(),
        timestamps: (0..events.len()).map(day).collect(),
        events: events.iter().map(|&e| Some(e)).collect(),
        dynamics: dynamics
            .iter()
            .map(|col| col.iter().map(|&v| Some(v)).collect())
            .collect(),
        statics: statics.to_vec(),
    }
}

pub fn series(rec: &PatientRecord) -> Arc<PatientSeries<f64>> {
    Arc::new(PatientSeries::from_record(rec).unwrap())
}

pub fn windows(rec: &PatientRecord, n: usize) -> Vec<Window<f64>> {
    build_windows(&series(rec), n)
}
