//! Machine-readable experiment reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One evaluated geodesic or sample: its parameter and the computed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub parameter: f64,
    pub value: f64,
}

/// Deviation of the record values from a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub target: f64,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    pub count: usize,
}

impl Summary {
    pub fn from_records(records: &[Record], target: f64) -> Self {
        let devs = records.iter().map(|r| (r.value - target).abs());
        let count = records.len();
        let max_abs_deviation = devs.clone().fold(0.0, f64::max);
        let mean_abs_deviation = if count == 0 {
            0.0
        } else {
            devs.sum::<f64>() / count as f64
        };
        Self {
            target,
            max_abs_deviation,
            mean_abs_deviation,
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub schema_version: u32,
    pub experiment: String,
    pub tool_version: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    pub records: Vec<Record>,
    pub details: serde_json::Value,
    pub timestamp: String,
}

impl TransformReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            passed: false,
            summary: None,
            records: Vec::new(),
            details: serde_json::Value::Null,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    /// Sets the records together with their summary against `target`.
    pub fn with_records(mut self, records: Vec<Record>, target: f64) -> Self {
        self.summary = Some(Summary::from_records(&records, target));
        self.records = records;
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV of the records with the given column names.
    pub fn records_csv(&self, parameter: &str, value: &str) -> String {
        let mut out = format!("{parameter},{value}\n");
        for r in &self.records {
            out.push_str(&format!("{},{}\n", r.parameter, r.value));
        }
        out
    }
}
