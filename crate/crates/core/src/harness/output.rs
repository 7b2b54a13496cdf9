//! Scenario summaries and artifact writers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::DiagnosticsRecord;
use crate::error::{Error, Result};

/// One entry of a scenario's invariant suite. Only asserted checks decide
/// the exit status; the others are reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    /// The threshold it is compared with.
    pub limit: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= limit`.
    pub fn at_most(name: &str, measured: f64, limit: f64, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            asserted: true,
            passed: measured <= limit,
            measured,
            limit,
            detail: detail.into(),
        }
    }

    /// Passes when `measured >= limit`.
    pub fn at_least(name: &str, measured: f64, limit: f64, detail: impl Into<String>) -> Check {
        Check {
            passed: measured >= limit,
            ..Check::at_most(name, measured, limit, detail)
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            asserted: true,
            passed,
            measured: if passed { 1.0 } else { 0.0 },
            limit: 1.0,
            detail: detail.into(),
        }
    }

    pub fn informational(mut self) -> Check {
        self.asserted = false;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    /// Error that ended the scenario early, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn new(scenario: &str) -> Summary {
        Summary {
            scenario: scenario.to_string(),
            ..Default::default()
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    /// All asserted checks passed and nothing failed.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed || !c.asserted)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        v["passed"] = serde_json::Value::Bool(self.passed());
        serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Diagnostics as CSV: one header row, fields in record order, shortest
/// round-trip decimal floats, empty cells for missing values.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn diagnostics_csv_string(records: &[DiagnosticsRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

/// Any serializable rows as CSV.
pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
