//! Structured results: named checks with pass lines, free-form data, and
//! the files written next to them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Result;

pub const REPORT_SCHEMA: &str = "blockrg-report-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub checks: Vec<Check>,
    pub data: serde_json::Map<String, Value>,
    pub artifacts: Vec<String>,
    pub passed: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub files: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            seed,
            config,
            checks: Vec::new(),
            data: serde_json::Map::new(),
            artifacts: Vec::new(),
            passed: true,
            error: None,
            files: Vec::new(),
        }
    }

    /// Record `value ≤ tolerance`.
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        self.record(name, value, tolerance, value <= tolerance)
    }

    /// Record `value ≥ tolerance`.
    pub fn at_least(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        self.record(name, value, tolerance, value >= tolerance)
    }

    pub fn holds(&mut self, name: &str, ok: bool) -> bool {
        self.record(name, if ok { 1.0 } else { 0.0 }, 1.0, ok)
    }

    fn record(&mut self, name: &str, value: f64, tolerance: f64, passed: bool) -> bool {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            value,
            tolerance,
            passed,
        });
        passed
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.data.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn fail(&mut self, message: String) {
        self.passed = false;
        self.error = Some(message);
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{} ({})\n", self.command, if self.passed { "pass" } else { "FAIL" });
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {:<44} {:>12.4e}  (line {:.1e})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            ));
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("  error: {e}\n"));
        }
        out
    }
}

impl Report {
    /// Queue a file to be written next to `report.json`.
    pub fn attach(&mut self, name: &str, contents: String) {
        self.artifacts.push(name.into());
        self.files.push((name.into(), contents));
    }

    /// Write the attached files, `summary.txt` and `report.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        std::fs::write(dir.join("summary.txt"), self.summary())?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
