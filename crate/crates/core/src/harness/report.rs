use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::stats::Summary;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: Value,
    pub bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    cases: Vec<Value>,
    pub summary: BTreeMap<String, Summary>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u128>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            cases: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            wall_clock_ms: None,
        }
    }

    /// Cases are only ever appended, in the order they were computed.
    pub fn push_case(&mut self, case: impl Serialize) -> Result<()> {
        self.cases.push(serde_json::to_value(case)?);
        Ok(())
    }

    pub fn cases(&self) -> &[Value] {
        &self.cases
    }

    pub fn check(&mut self, name: &str, passed: bool, observed: impl Serialize, bound: &str) -> Result<()> {
        self.passed &= passed;
        self.checks.push(Check { name: name.into(), passed, observed: serde_json::to_value(observed)?, bound: bound.into() });
        Ok(())
    }

    pub fn summarize(&mut self, name: &str, values: &[f64]) {
        if let Some(s) = Summary::of(values) {
            self.summary.insert(name.into(), s);
        }
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    /// One row per case; columns are the scalar fields of the cases in first-seen order.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut columns: Vec<String> = Vec::new();
        for case in &self.cases {
            if let Value::Object(map) = case {
                for (k, v) in map {
                    if !v.is_object() && !v.is_array() && !columns.contains(k) {
                        columns.push(k.clone());
                    }
                }
            }
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&columns).map_err(csv_err)?;
        for case in &self.cases {
            let row: Vec<String> = columns
                .iter()
                .map(|c| match case.get(c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
