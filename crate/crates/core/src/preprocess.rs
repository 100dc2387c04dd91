//! Cleaning: frequent-assessment period extraction, gap filling with flags,
//! and z-score standardization fitted on training days only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{
    validate_cohort, Cohort, CohortError, Feature, FeatureKind, FeatureSchema, PatientRecord,
    ValidationReport, ValidationStatus,
};
use crate::windowing::train_input_days;

pub const FLAG_IMPUTED: &str = "imputed";
pub const FLAG_MULTI_DAY: &str = "multi_day_entry";
/// Separator between a source patient id and a segment number.
pub const SEGMENT_SEPARATOR: char = '#';

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid period parameters: {0}")]
    InvalidParams(String),
    #[error("patient `{patient_id}`: dynamic feature `{feature}` has no observed value")]
    AllMissingFeature { patient_id: String, feature: String },
    #[error("patient `{0}` has missing event values")]
    MissingEvents(String),
    #[error("no training days to fit the standardizer on")]
    EmptyTraining,
    #[error("feature `{0}` is not in the cohort schema")]
    UnknownFeature(String),
    #[error(transparent)]
    Cohort(#[from] CohortError),
}

pub type Result<T, E = PreprocessError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodParams {
    pub min_len_days: u32,
    pub boundary_daily_run: u32,
    pub max_mean_gap: f64,
}

impl Default for PeriodParams {
    fn default() -> Self {
        Self {
            min_len_days: 30,
            boundary_daily_run: 5,
            max_mean_gap: 1.1,
        }
    }
}

impl PeriodParams {
    pub fn validate(&self) -> Result<()> {
        if self.boundary_daily_run < 1 {
            return Err(PreprocessError::InvalidParams(
                "boundary_daily_run must be at least 1".into(),
            ));
        }
        if self.min_len_days < 2 * self.boundary_daily_run {
            return Err(PreprocessError::InvalidParams(
                "min_len_days must be at least twice boundary_daily_run".into(),
            ));
        }
        if !(self.max_mean_gap >= 1.0) {
            return Err(PreprocessError::InvalidParams(
                "max_mean_gap must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Id given to the `k`-th (1-based) of `count` segments cut from `source`.
pub fn segment_id(source: &str, k: usize, count: usize) -> String {
    if count <= 1 {
        source.to_string()
    } else {
        format!("{source}{SEGMENT_SEPARATOR}{k}")
    }
}

/// Inverse of [`segment_id`].
pub fn segment_source_id(id: &str) -> &str {
    match id.rsplit_once(SEGMENT_SEPARATOR) {
        Some((src, k)) if !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => src,
        _ => id,
    }
}

/// Cuts a record into its frequent-assessment periods.
///
/// A period spans at least `min_len_days` calendar days, starts and ends with
/// `boundary_daily_run` entries on consecutive days, and has a mean gap
/// `(t_last - t_first) / (N - 1)` of at most `max_mean_gap`. Candidate starts
/// are scanned left to right; each accepted start is extended to the furthest
/// qualifying end and scanning resumes after it.
pub fn extract_frequent_periods(
    rec: &PatientRecord,
    params: &PeriodParams,
) -> Result<Vec<PatientRecord>> {
    params.validate()?;
    let days = rec.day_numbers();
    let n = days.len();
    let run = params.boundary_daily_run as usize;
    let daily_run = |from: usize| days[from + run - 1] - days[from] == run as i64 - 1;
    let qualifies = |i: usize, j: usize| {
        let span = days[j] - days[i];
        j + 1 - i >= run
            && span + 1 >= i64::from(params.min_len_days)
            && daily_run(j + 1 - run)
            && span as f64 <= params.max_mean_gap * (j - i) as f64 + 1e-12
    };

    let mut ranges = Vec::new();
    let mut i = 0;
    while i + run <= n {
        if daily_run(i) {
            if let Some(j) = (i + 1..n).rev().find(|&j| qualifies(i, j)) {
                ranges.push(i..j + 1);
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    let count = ranges.len();
    Ok(ranges
        .into_iter()
        .enumerate()
        .map(|(k, r)| rec.slice(r, segment_id(&rec.patient_id, k + 1, count)))
        .collect())
}

/// Per-day flags produced while filling a segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentFlags {
    pub imputed: Vec<u8>,
    pub multi_day_entry: Vec<u8>,
}

/// Schema extended with the two flag features appended by [`impute_dynamics`].
pub fn flagged_schema(schema: &FeatureSchema) -> Result<FeatureSchema> {
    let mut dynamic = schema.dynamic_features.clone();
    dynamic.push(Feature::new(FLAG_IMPUTED, FeatureKind::Binary));
    dynamic.push(Feature::new(FLAG_MULTI_DAY, FeatureKind::Binary));
    Ok(FeatureSchema::new(dynamic, schema.static_features.clone())?)
}

/// Fills missing dynamic values by linear interpolation over calendar days
/// between the nearest observed neighbours (boundaries copy the nearest
/// observed value), then appends the `imputed` and `multi_day_entry` flags
/// as two extra dynamic series. Integer-valued kinds are rounded back onto
/// their domain.
pub fn impute_dynamics(
    rec: &PatientRecord,
    schema: &FeatureSchema,
) -> Result<(PatientRecord, SegmentFlags)> {
    if rec.events.iter().any(Option::is_none) {
        return Err(PreprocessError::MissingEvents(rec.patient_id.clone()));
    }
    let days = rec.day_numbers();
    let n = rec.len();
    let mut imputed = vec![0u8; n];
    let mut dynamics = Vec::with_capacity(rec.dynamics.len() + 2);
    for (series, feature) in rec.dynamics.iter().zip(&schema.dynamic_features) {
        let observed: Vec<usize> = (0..n).filter(|&t| series[t].is_some()).collect();
        if observed.is_empty() && n > 0 {
            return Err(PreprocessError::AllMissingFeature {
                patient_id: rec.patient_id.clone(),
                feature: feature.name.clone(),
            });
        }
        let integral = !matches!(feature.kind, FeatureKind::Continuous);
        let mut filled = series.clone();
        let mut next = 0; // index into `observed` of the first observation at or after t
        for t in 0..n {
            while next < observed.len() && observed[next] < t {
                next += 1;
            }
            if series[t].is_some() {
                continue;
            }
            let value = match (next.checked_sub(1).map(|k| observed[k]), observed.get(next)) {
                (Some(a), Some(&b)) => {
                    let (va, vb) = (series[a].unwrap(), series[b].unwrap());
                    let frac = (days[t] - days[a]) as f64 / (days[b] - days[a]) as f64;
                    va + (vb - va) * frac
                }
                (Some(a), None) => series[a].unwrap(),
                (None, Some(&b)) => series[b].unwrap(),
                (None, None) => unreachable!("series has at least one observation"),
            };
            filled[t] = Some(if integral { value.round() } else { value });
            imputed[t] = 1;
        }
        dynamics.push(filled);
    }
    let multi_day_entry: Vec<u8> = (0..n)
        .map(|t| u8::from(t > 0 && days[t] - days[t - 1] > 1))
        .collect();
    dynamics.push(imputed.iter().map(|&f| Some(f64::from(f))).collect());
    dynamics.push(
        multi_day_entry
            .iter()
            .map(|&f| Some(f64::from(f)))
            .collect(),
    );
    let out = PatientRecord {
        patient_id: rec.patient_id.clone(),
        timestamps: rec.timestamps.clone(),
        events: rec.events.clone(),
        dynamics,
        statics: rec.statics.clone(),
    };
    Ok((
        out,
        SegmentFlags {
            imputed,
            multi_day_entry,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// Zero-variance feature, passed through unscaled.
    pub constant: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub features: Vec<FeatureStats>,
}

impl StandardizationStats {
    pub fn get(&self, name: &str) -> Option<&FeatureStats> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Mean and population standard deviation per feature column.
pub fn fit_standardizer(columns: &[(String, Vec<f64>)]) -> Result<StandardizationStats> {
    if columns.is_empty() || columns.iter().any(|(_, v)| v.is_empty()) {
        return Err(PreprocessError::EmptyTraining);
    }
    let features = columns
        .iter()
        .map(|(name, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            let constant = std <= f64::EPSILON * mean.abs().max(1.0);
            FeatureStats {
                name: name.clone(),
                mean,
                std: if constant { 0.0 } else { std },
                constant,
            }
        })
        .collect();
    Ok(StandardizationStats { features })
}

fn is_flag(name: &str) -> bool {
    name == FLAG_IMPUTED || name == FLAG_MULTI_DAY
}

/// Values of every scalable feature on the days that feed training windows:
/// the first `Tp - rho - 1` days of each series. Static values are counted
/// once per such day. Flags and the event series are excluded.
pub fn training_day_values(cohort: &Cohort, test_fraction: f64) -> Vec<(String, Vec<f64>)> {
    let schema = &cohort.schema;
    let mut columns: Vec<(String, Vec<f64>)> = schema
        .dynamic_features
        .iter()
        .chain(&schema.static_features)
        .filter(|f| !is_flag(&f.name))
        .map(|f| (f.name.clone(), Vec::new()))
        .collect();
    for p in &cohort.patients {
        let days = train_input_days(p.len(), test_fraction);
        let mut col = 0;
        for (f, series) in schema.dynamic_features.iter().zip(&p.dynamics) {
            if is_flag(&f.name) {
                continue;
            }
            columns[col].1.extend(series[..days].iter().flatten());
            col += 1;
        }
        for (f, &v) in schema.static_features.iter().zip(&p.statics) {
            if is_flag(&f.name) {
                continue;
            }
            columns[col].1.extend(std::iter::repeat_n(v, days));
            col += 1;
        }
    }
    columns
}

/// `x' = (x - mean) / std` for every feature in `stats`; constant features
/// pass through. Scaled features become continuous in the returned schema.
pub fn apply_standardizer(cohort: &Cohort, stats: &StandardizationStats) -> Result<Cohort> {
    let mut schema = cohort.schema.clone();
    let mut patients = cohort.patients.clone();
    for fs in &stats.features {
        let scale = |v: f64| (v - fs.mean) / fs.std;
        if let Some(j) = schema.dynamic_index(&fs.name) {
            if fs.constant {
                continue;
            }
            schema.dynamic_features[j].kind = FeatureKind::Continuous;
            for p in &mut patients {
                for v in p.dynamics[j].iter_mut().flatten() {
                    *v = scale(*v);
                }
            }
        } else if let Some(l) = schema.static_index(&fs.name) {
            if fs.constant {
                continue;
            }
            schema.static_features[l].kind = FeatureKind::Continuous;
            for p in &mut patients {
                p.statics[l] = scale(p.statics[l]);
            }
        } else {
            return Err(PreprocessError::UnknownFeature(fs.name.clone()));
        }
    }
    Ok(Cohort::new(schema, patients)?)
}

/// Inverse of the standardizer for a single value of feature `name`.
pub fn unstandardize(stats: &StandardizationStats, name: &str, value: f64) -> f64 {
    match stats.get(name) {
        Some(fs) if !fs.constant => value * fs.std + fs.mean,
        _ => value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub source_id: String,
    pub segment_id: String,
    pub len: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub validation: ValidationReport,
    pub dropped: Vec<String>,
    pub without_period: Vec<String>,
    pub segments: Vec<SegmentInfo>,
    pub discarded_entries: usize,
}

/// Drop, segment and fill a raw cohort. Standardization is a separate step
/// because its statistics depend on the train/test split.
pub fn clean_cohort(cohort: &Cohort, params: &PeriodParams) -> Result<(Cohort, PreprocessReport)> {
    let validation = validate_cohort(cohort);
    let schema = flagged_schema(&cohort.schema)?;
    let mut report = PreprocessReport {
        dropped: validation
            .ids_with(ValidationStatus::Drop)
            .map(str::to_string)
            .collect(),
        validation,
        ..Default::default()
    };
    let mut patients = Vec::new();
    for p in &cohort.patients {
        if report.dropped.contains(&p.patient_id) {
            continue;
        }
        let segments = extract_frequent_periods(p, params)?;
        let kept: usize = segments.iter().map(PatientRecord::len).sum();
        report.discarded_entries += p.len() - kept;
        if segments.is_empty() {
            report.without_period.push(p.patient_id.clone());
        }
        for seg in segments {
            let (filled, _) = impute_dynamics(&seg, &cohort.schema)?;
            report.segments.push(SegmentInfo {
                source_id: p.patient_id.clone(),
                segment_id: filled.patient_id.clone(),
                len: filled.len(),
            });
            patients.push(filled);
        }
    }
    Ok((Cohort::new(schema, patients)?, report))
}

/// A cleaned and standardized cohort with everything needed to undo the
/// scaling.
#[derive(Clone, Debug)]
pub struct PreparedCohort {
    /// Standardized cohort; scaled features are continuous in its schema.
    pub cohort: Cohort,
    /// Schema after cleaning but before scaling (original kinds plus flags).
    pub raw_schema: FeatureSchema,
    pub stats: StandardizationStats,
    pub report: PreprocessReport,
}

/// Cleans the cohort, fits the standardizer on training days only and
/// applies it.
pub fn prepare_cohort(
    cohort: &Cohort,
    params: &PeriodParams,
    test_fraction: f64,
) -> Result<PreparedCohort> {
    let (clean, report) = clean_cohort(cohort, params)?;
    if clean.patients.is_empty() {
        return Err(PreprocessError::EmptyTraining);
    }
    let stats = fit_standardizer(&training_day_values(&clean, test_fraction))?;
    Ok(PreparedCohort {
        cohort: apply_standardizer(&clean, &stats)?,
        raw_schema: clean.schema,
        stats,
        report,
    })
}
