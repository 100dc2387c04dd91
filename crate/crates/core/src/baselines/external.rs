//! Scores produced by models outside this crate, read from
//! `patient_id,label_index,score` CSV files.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::BaselineError;
use crate::evaluation::TestKey;

#[derive(Debug, Deserialize)]
struct Row {
    patient_id: String,
    label_index: usize,
    score: f64,
}

/// Reads external scores and aligns them to `keys`. Every key must be covered
/// exactly once and no other rows may appear.
pub fn read_external_scores<R: Read>(
    reader: R,
    keys: &[TestKey],
) -> Result<Vec<f64>, BaselineError> {
    let index: HashMap<(&str, usize), usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| ((k.patient_id.as_str(), k.label_index), i))
        .collect();
    let mut out: Vec<Option<f64>> = vec![None; keys.len()];
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let key = format!("{}@{}", row.patient_id, row.label_index);
        if !row.score.is_finite() {
            return Err(BaselineError::Alignment(format!(
                "row {}: score for {key} is not finite",
                line + 2
            )));
        }
        let &i = index
            .get(&(row.patient_id.as_str(), row.label_index))
            .ok_or_else(|| BaselineError::Alignment(format!("{key} is not a test window")))?;
        if out[i].replace(row.score).is_some() {
            return Err(BaselineError::DuplicateKey(key));
        }
    }
    out.into_iter()
        .zip(keys)
        .map(|(s, k)| {
            s.ok_or_else(|| {
                BaselineError::Alignment(format!("no score for {}@{}", k.patient_id, k.label_index))
            })
        })
        .collect()
}

pub fn load_external_scores(path: &Path, keys: &[TestKey]) -> Result<Vec<f64>, BaselineError> {
    let file = std::fs::File::open(path)
        .map_err(|e| BaselineError::Io(format!("{}: {e}", path.display())))?;
    read_external_scores(file, keys)
}
