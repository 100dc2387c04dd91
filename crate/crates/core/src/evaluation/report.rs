//! Ranked comparison table and CSV emitters.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapReport;
use super::prg::PrgCurve;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub auc_prg: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Top model's AUC-PRG minus this row's.
    pub difference: f64,
    /// One-sided p-value that the top model is no better than this one;
    /// absent for the top row.
    pub p_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Sorts models by point estimate, best first. Ties keep report order.
pub fn comparison_table(report: &BootstrapReport) -> ComparisonTable {
    let mut models: Vec<_> = report.models.iter().collect();
    models.sort_by(|a, b| b.point_estimate.total_cmp(&a.point_estimate));
    let Some(top) = models.first() else {
        return ComparisonTable { rows: Vec::new() };
    };
    let rows = models
        .iter()
        .enumerate()
        .map(|(i, m)| ComparisonRow {
            model: m.name.clone(),
            auc_prg: m.point_estimate,
            ci_lower: m.ci_lower,
            ci_upper: m.ci_upper,
            difference: top.point_estimate - m.point_estimate,
            p_value: (i > 0)
                .then(|| report.pair(&top.name, &m.name).map(|p| p.p_value))
                .flatten(),
        })
        .collect();
    ComparisonTable { rows }
}

impl ComparisonTable {
    /// `model,auc_prg,ci_lower,ci_upper,difference,p_value`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.model.len())
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(
            f,
            "{:<width$}  {:>7}  {:>17}  {:>7}  {:>8}",
            "Model", "AUC-PRG", "95% CI", "Dif.", "p"
        )?;
        for r in &self.rows {
            let p = match r.p_value {
                None => "-".to_string(),
                Some(p) => format!("{p:.4}"),
            };
            let ci = format!("[{:.4}, {:.4}]", r.ci_lower, r.ci_upper);
            writeln!(
                f,
                "{:<width$}  {:>7.4}  {:>17}  {:>7.4}  {:>8}",
                r.model, r.auc_prg, ci, r.difference, p
            )?;
        }
        Ok(())
    }
}

/// `model,recG,precG` rows for external plotting.
pub fn write_prg_points<W: Write>(curves: &[(String, PrgCurve)], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "recG", "precG"])?;
    for (name, curve) in curves {
        for p in &curve.points {
            w.write_record([
                name.as_str(),
                &p.recall_gain.to_string(),
                &p.precision_gain.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `model,resample,auc_prg` rows, one per resample.
pub fn write_resamples<W: Write>(report: &BootstrapReport, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "resample", "auc_prg"])?;
    for m in &report.models {
        for (b, v) in m.resample_aucs.iter().enumerate() {
            w.write_record([m.name.as_str(), &b.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
