//! Longitudinal patient records and the on-disk cohort format.
//!
//! Daily data lives in a long-format CSV (`patient_id,date,event,<dynamic...>`),
//! static covariates in a one-row-per-patient CSV (`patient_id,<static...>`),
//! and feature kinds in a TOML schema file.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EVENT_COLUMN: &str = "event";
const RESERVED: [&str; 3] = ["patient_id", "date", EVENT_COLUMN];

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("malformed row at line {line}, column `{column}`: {reason}")]
    MalformedRow {
        line: u64,
        column: String,
        reason: String,
    },
    #[error("patient `{patient_id}` has more than one row dated {date}")]
    DuplicateDay { patient_id: String, date: NaiveDate },
    #[error("column `{0}` is not declared in the schema")]
    UnknownColumn(String),
    #[error("column `{0}` is declared in the schema but missing from the file")]
    MissingColumn(String),
    #[error("patient `{0}` appears in the events file but not in the statics file")]
    MissingStatic(String),
    #[error("patient `{0}` appears more than once in the statics file")]
    DuplicatePatient(String),
    #[error("invalid record for patient `{patient_id}`: {reason}")]
    InvalidRecord { patient_id: String, reason: String },
}

pub type Result<T, E = CohortError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Ordinal {
        s_max: u32,
        #[serde(default)]
        zero_based: bool,
    },
    Continuous,
}

impl FeatureKind {
    /// Whether `value` lies in the domain of this kind.
    pub fn admits(&self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match *self {
            FeatureKind::Binary => value == 0.0 || value == 1.0,
            FeatureKind::Ordinal { s_max, zero_based } => {
                let lo = if zero_based { 0.0 } else { 1.0 };
                value.fract() == 0.0 && value >= lo && value <= f64::from(s_max)
            }
            FeatureKind::Continuous => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered declaration of the dynamic and static features of a cohort.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default, rename = "dynamic")]
    pub dynamic_features: Vec<Feature>,
    #[serde(default, rename = "static")]
    pub static_features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(dynamic_features: Vec<Feature>, static_features: Vec<Feature>) -> Result<Self> {
        let schema = Self {
            dynamic_features,
            static_features,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: HashSet<&str> = RESERVED.iter().copied().collect();
        for f in self.dynamic_features.iter().chain(&self.static_features) {
            if f.name.is_empty() {
                return Err(CohortError::Schema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(CohortError::Schema(format!(
                    "feature name `{}` is not unique (or collides with a reserved column)",
                    f.name
                )));
            }
            if let FeatureKind::Ordinal { s_max, .. } = f.kind {
                if s_max < 1 {
                    return Err(CohortError::Schema(format!(
                        "ordinal feature `{}` needs s_max >= 1",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| CohortError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes to toml")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| io_err(path, source))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml_string()).map_err(|source| io_err(path, source))
    }

    pub fn dynamic_index(&self, name: &str) -> Option<usize> {
        self.dynamic_features.iter().position(|f| f.name == name)
    }

    pub fn static_index(&self, name: &str) -> Option<usize> {
        self.static_features.iter().position(|f| f.name == name)
    }

    pub fn num_dynamic(&self) -> usize {
        self.dynamic_features.len()
    }

    pub fn num_static(&self) -> usize {
        self.static_features.len()
    }

    /// Width of one recurrent input row: event + dynamic + static.
    pub fn input_dim(&self) -> usize {
        1 + self.num_dynamic() + self.num_static()
    }
}

/// One patient's daily series. Values are `None` where the source cell was empty.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub timestamps: Vec<NaiveDate>,
    pub events: Vec<Option<u8>>,
    /// One series per dynamic feature, in schema order.
    pub dynamics: Vec<Vec<Option<f64>>>,
    /// One value per static feature, in schema order.
    pub statics: Vec<f64>,
}

impl PatientRecord {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Timestamps as day numbers, for gap arithmetic.
    pub fn day_numbers(&self) -> Vec<i64> {
        self.timestamps
            .iter()
            .map(|d| i64::from(d.num_days_from_ce()))
            .collect()
    }

    /// Copy of the entries in `range` (indices into the series).
    pub fn slice(&self, range: std::ops::Range<usize>, patient_id: String) -> PatientRecord {
        PatientRecord {
            patient_id,
            timestamps: self.timestamps[range.clone()].to_vec(),
            events: self.events[range.clone()].to_vec(),
            dynamics: self
                .dynamics
                .iter()
                .map(|s| s[range.clone()].to_vec())
                .collect(),
            statics: self.statics.clone(),
        }
    }

    /// Fully observed event series, if there are no gaps.
    pub fn observed_events(&self) -> Option<Vec<u8>> {
        self.events.iter().copied().collect()
    }

    pub fn check_against(&self, schema: &FeatureSchema) -> Result<()> {
        let bad = |reason: String| CohortError::InvalidRecord {
            patient_id: self.patient_id.clone(),
            reason,
        };
        let tp = self.len();
        if self.events.len() != tp {
            return Err(bad(format!(
                "event series has length {} but there are {tp} timestamps",
                self.events.len()
            )));
        }
        if self.dynamics.len() != schema.num_dynamic() {
            return Err(bad(format!(
                "{} dynamic series for {} declared features",
                self.dynamics.len(),
                schema.num_dynamic()
            )));
        }
        for (series, f) in self.dynamics.iter().zip(&schema.dynamic_features) {
            if series.len() != tp {
                return Err(bad(format!("dynamic series `{}` has wrong length", f.name)));
            }
            if let Some(v) = series.iter().flatten().find(|v| !f.kind.admits(**v)) {
                return Err(bad(format!("value {v} outside the domain of `{}`", f.name)));
            }
        }
        if self.statics.len() != schema.num_static() {
            return Err(bad("static vector does not match the schema".into()));
        }
        for (v, f) in self.statics.iter().zip(&schema.static_features) {
            if !f.kind.admits(*v) {
                return Err(bad(format!("value {v} outside the domain of `{}`", f.name)));
            }
        }
        if self.events.iter().flatten().any(|&e| e > 1) {
            return Err(bad("event values must be 0 or 1".into()));
        }
        if self.timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("timestamps are not strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub schema: FeatureSchema,
    pub patients: Vec<PatientRecord>,
}

impl Cohort {
    /// Builds a cohort after checking every invariant of the schema and records.
    pub fn new(schema: FeatureSchema, patients: Vec<PatientRecord>) -> Result<Self> {
        schema.validate()?;
        let mut ids = HashSet::new();
        for p in &patients {
            if !ids.insert(p.patient_id.as_str()) {
                return Err(CohortError::InvalidRecord {
                    patient_id: p.patient_id.clone(),
                    reason: "duplicate patient id".into(),
                });
            }
            p.check_against(&schema)?;
        }
        Ok(Self { schema, patients })
    }

    pub fn patient(&self, id: &str) -> Option<&PatientRecord> {
        self.patients.iter().find(|p| p.patient_id == id)
    }

    pub fn total_days(&self) -> usize {
        self.patients.iter().map(PatientRecord::len).sum()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CohortError {
    CohortError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|source| io_err(path, source))
}

fn parse_value(text: &str, feature: &Feature, line: u64) -> Result<f64> {
    let malformed = |reason: String| CohortError::MalformedRow {
        line,
        column: feature.name.clone(),
        reason,
    };
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| malformed(format!("`{text}` is not a number")))?;
    if !feature.kind.admits(v) {
        return Err(malformed(format!(
            "`{text}` is outside the domain of {:?}",
            feature.kind
        )));
    }
    Ok(v)
}

/// Loads a cohort from the events and statics CSV files.
pub fn load_cohort(
    events_path: impl AsRef<Path>,
    statics_path: impl AsRef<Path>,
    schema: &FeatureSchema,
) -> Result<Cohort> {
    let events = open(events_path.as_ref())?;
    let statics = open(statics_path.as_ref())?;
    read_cohort(events, statics, schema)
}

/// Same as [`load_cohort`] over arbitrary readers.
pub fn read_cohort<R1: Read, R2: Read>(
    events: R1,
    statics: R2,
    schema: &FeatureSchema,
) -> Result<Cohort> {
    schema.validate()?;
    let statics_by_id = read_statics(statics, schema)?;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(events);
    let headers = rdr.headers()?.clone();
    for (pos, expected) in RESERVED.iter().enumerate() {
        match headers.get(pos) {
            Some(h) if h == *expected => {}
            Some(h) if schema.dynamic_index(h).is_none() && !RESERVED.contains(&h) => {
                return Err(CohortError::UnknownColumn(h.to_string()))
            }
            _ => return Err(CohortError::MissingColumn((*expected).to_string())),
        }
    }
    // column position in the file -> dynamic feature index
    let mut column_map = Vec::new();
    let mut present = vec![false; schema.num_dynamic()];
    for h in headers.iter().skip(RESERVED.len()) {
        let idx = schema
            .dynamic_index(h)
            .ok_or_else(|| CohortError::UnknownColumn(h.to_string()))?;
        if present[idx] {
            return Err(CohortError::Schema(format!("column `{h}` appears twice")));
        }
        present[idx] = true;
        column_map.push(idx);
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(CohortError::MissingColumn(
            schema.dynamic_features[missing].name.clone(),
        ));
    }

    struct Row {
        date: NaiveDate,
        event: Option<u8>,
        values: Vec<Option<f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<Row>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(CohortError::MalformedRow {
                line,
                column: String::new(),
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let pid = record[0].trim().to_string();
        if pid.is_empty() {
            return Err(CohortError::MalformedRow {
                line,
                column: "patient_id".into(),
                reason: "empty patient id".into(),
            });
        }
        let date = NaiveDate::parse_from_str(record[1].trim(), "%Y-%m-%d").map_err(|e| {
            CohortError::MalformedRow {
                line,
                column: "date".into(),
                reason: format!("`{}`: {e}", &record[1]),
            }
        })?;
        let event = match record[2].trim() {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(CohortError::MalformedRow {
                    line,
                    column: EVENT_COLUMN.into(),
                    reason: format!("`{other}` is not 0, 1 or empty"),
                })
            }
        };
        let mut values = vec![None; schema.num_dynamic()];
        for (cell, &idx) in record.iter().skip(RESERVED.len()).zip(&column_map) {
            if !cell.trim().is_empty() {
                values[idx] = Some(parse_value(cell, &schema.dynamic_features[idx], line)?);
            }
        }
        if !rows.contains_key(&pid) {
            order.push(pid.clone());
        }
        rows.entry(pid).or_default().push(Row {
            date,
            event,
            values,
        });
    }

    let mut patients = Vec::with_capacity(order.len());
    for pid in order {
        let mut prows = rows.remove(&pid).unwrap_or_default();
        prows.sort_by_key(|r| r.date);
        if let Some(w) = prows.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(CohortError::DuplicateDay {
                patient_id: pid,
                date: w[0].date,
            });
        }
        let statics = statics_by_id
            .get(&pid)
            .cloned()
            .ok_or_else(|| CohortError::MissingStatic(pid.clone()))?;
        let mut dynamics = vec![Vec::with_capacity(prows.len()); schema.num_dynamic()];
        for r in &prows {
            for (series, v) in dynamics.iter_mut().zip(&r.values) {
                series.push(*v);
            }
        }
        patients.push(PatientRecord {
            patient_id: pid,
            timestamps: prows.iter().map(|r| r.date).collect(),
            events: prows.iter().map(|r| r.event).collect(),
            dynamics,
            statics,
        });
    }
    Cohort::new(schema.clone(), patients)
}

fn read_statics<R: Read>(reader: R, schema: &FeatureSchema) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("patient_id") {
        return Err(CohortError::MissingColumn("patient_id".into()));
    }
    let mut column_map = Vec::new();
    let mut present = vec![false; schema.num_static()];
    for h in headers.iter().skip(1) {
        let idx = schema
            .static_index(h)
            .ok_or_else(|| CohortError::UnknownColumn(h.to_string()))?;
        if present[idx] {
            return Err(CohortError::Schema(format!("column `{h}` appears twice")));
        }
        present[idx] = true;
        column_map.push(idx);
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(CohortError::MissingColumn(
            schema.static_features[missing].name.clone(),
        ));
    }
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let pid = record[0].trim().to_string();
        let mut values = vec![0.0; schema.num_static()];
        for (cell, &idx) in record.iter().skip(1).zip(&column_map) {
            let feature = &schema.static_features[idx];
            if cell.trim().is_empty() {
                return Err(CohortError::MalformedRow {
                    line,
                    column: feature.name.clone(),
                    reason: "static values may not be empty".into(),
                });
            }
            values[idx] = parse_value(cell, feature, line)?;
        }
        if out.insert(pid.clone(), values).is_some() {
            return Err(CohortError::DuplicatePatient(pid));
        }
    }
    Ok(out)
}

/// Writes a cohort in the format read by [`load_cohort`].
pub fn write_cohort<W1: Write, W2: Write>(cohort: &Cohort, events: W1, statics: W2) -> Result<()> {
    let schema = &cohort.schema;
    let mut w = csv::Writer::from_writer(events);
    let mut header: Vec<&str> = RESERVED.to_vec();
    header.extend(schema.dynamic_features.iter().map(|f| f.name.as_str()));
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for p in &cohort.patients {
        for t in 0..p.len() {
            row.clear();
            row.push(p.patient_id.clone());
            row.push(p.timestamps[t].format("%Y-%m-%d").to_string());
            row.push(p.events[t].map_or(String::new(), |e| e.to_string()));
            row.extend(
                p.dynamics
                    .iter()
                    .map(|s| s[t].map_or(String::new(), |v| v.to_string())),
            );
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|source| CohortError::Io {
        path: "<events>".into(),
        source,
    })?;

    let mut w = csv::Writer::from_writer(statics);
    let mut header = vec!["patient_id"];
    header.extend(schema.static_features.iter().map(|f| f.name.as_str()));
    w.write_record(&header)?;
    for p in &cohort.patients {
        row.clear();
        row.push(p.patient_id.clone());
        row.extend(p.statics.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| CohortError::Io {
        path: "<statics>".into(),
        source,
    })?;
    Ok(())
}

pub fn save_cohort(
    cohort: &Cohort,
    events_path: impl AsRef<Path>,
    statics_path: impl AsRef<Path>,
) -> Result<()> {
    let (ep, sp) = (events_path.as_ref(), statics_path.as_ref());
    let events = fs::File::create(ep).map_err(|source| io_err(ep, source))?;
    let statics = fs::File::create(sp).map_err(|source| io_err(sp, source))?;
    write_cohort(
        cohort,
        std::io::BufWriter::new(events),
        std::io::BufWriter::new(statics),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Ok,
    Impute,
    Drop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientValidation {
    pub patient_id: String,
    pub status: ValidationStatus,
    pub missing_events: usize,
    pub missing_dynamic: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub patients: Vec<PatientValidation>,
}

impl ValidationReport {
    pub fn ids_with(&self, status: ValidationStatus) -> impl Iterator<Item = &str> {
        self.patients
            .iter()
            .filter(move |p| p.status == status)
            .map(|p| p.patient_id.as_str())
    }

    pub fn count(&self, status: ValidationStatus) -> usize {
        self.ids_with(status).count()
    }
}

/// Flags each patient: any missing event value drops the patient entirely,
/// missing dynamic values only mark it for imputation.
pub fn validate_cohort(cohort: &Cohort) -> ValidationReport {
    let patients = cohort
        .patients
        .iter()
        .map(|p| {
            let missing_events = p.events.iter().filter(|e| e.is_none()).count();
            let missing_dynamic = p
                .dynamics
                .iter()
                .map(|s| s.iter().filter(|v| v.is_none()).count())
                .sum();
            let status = if missing_events > 0 {
                ValidationStatus::Drop
            } else if missing_dynamic > 0 {
                ValidationStatus::Impute
            } else {
                ValidationStatus::Ok
            };
            PatientValidation {
                patient_id: p.patient_id.clone(),
                status,
                missing_events,
                missing_dynamic,
            }
        })
        .collect();
    ValidationReport { patients }
}
