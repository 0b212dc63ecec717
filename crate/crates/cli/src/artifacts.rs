//! In-memory bundle of run outputs, written to disk only once complete.
//!
//! Every file carries the configuration hash: JSON records as a field, CSV
//! tables as their first column, plot files in a header comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Outcome of one named invariant or acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    command: String,
    config: RunConfig,
    hash: String,
    records: Vec<Value>,
    csv_header: Vec<String>,
    csv_rows: Vec<Vec<String>>,
    plots: BTreeMap<String, String>,
    extra: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl Artifacts {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            hash: config.hash(),
            records: Vec::new(),
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
            plots: BTreeMap::new(),
            extra: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn records(&self) -> &[Value] {
        &self.records
    }

    /// Records of one kind, in insertion order.
    pub fn records_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
        self.records.iter().filter(move |r| r["record"] == kind)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    /// Appends one JSON line `{"config_hash", "record", ...data}`; `data` must
    /// serialize to an object.
    pub fn record<T: Serialize>(&mut self, kind: &str, data: &T) -> Result<()> {
        let mut v = json!({ "config_hash": self.hash, "record": kind });
        match serde_json::to_value(data)? {
            Value::Object(m) => v.as_object_mut().expect("object").extend(m),
            other => {
                v["value"] = other;
            }
        }
        self.records.push(v);
        Ok(())
    }

    pub fn csv_header(&mut self, cols: &[&str]) {
        self.csv_header = cols.iter().map(|s| s.to_string()).collect();
    }

    pub fn csv_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.csv_header.len());
        self.csv_rows.push(cells);
    }

    /// Two-column text file `name.dat` with a legend line.
    pub fn plot(&mut self, name: &str, x_label: &str, y_label: &str, points: impl IntoIterator<Item = (f64, f64)>) {
        let mut s = format!("# config_hash={}\n# {x_label} {y_label}\n", self.hash);
        for (x, y) in points {
            let _ = writeln!(s, "{x:.17e} {y:.17e}");
        }
        self.plots.insert(format!("{name}.dat"), s);
    }

    /// Additional text file; `text` is prefixed with a hash comment line.
    pub fn text(&mut self, name: &str, text: &str) {
        self.extra.insert(name.to_string(), format!("# config_hash={}\n{text}", self.hash));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// All files by name, manifest included. Deterministic: no clocks,
    /// hosts or paths enter the content.
    pub fn render(&self) -> Result<BTreeMap<String, Vec<u8>>> {
        let mut files = BTreeMap::new();
        let mut jsonl = String::new();
        for r in &self.records {
            jsonl.push_str(&serde_json::to_string(r)?);
            jsonl.push('\n');
        }
        files.insert("records.jsonl".to_string(), jsonl.into_bytes());
        let mut csv = String::new();
        if !self.csv_header.is_empty() {
            csv.push_str("config_hash,");
            csv.push_str(&self.csv_header.join(","));
            csv.push('\n');
            for row in &self.csv_rows {
                csv.push_str(&self.hash);
                csv.push(',');
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
        }
        files.insert("summary.csv".to_string(), csv.into_bytes());
        for (k, v) in self.plots.iter().chain(&self.extra) {
            files.insert(k.clone(), v.clone().into_bytes());
        }
        let listing: BTreeMap<&String, String> = files
            .iter()
            .map(|(k, v)| (k, Sha256::digest(v).iter().map(|b| format!("{b:02x}")).collect()))
            .collect();
        let manifest = json!({
            "command": self.command,
            "config_hash": self.hash,
            "config": self.config,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "files": listing,
            "checks": self.checks,
            "failures": self.failures(),
            "passed": self.passed(),
        });
        files.insert("manifest.json".to_string(), serde_json::to_vec_pretty(&manifest)?);
        Ok(files)
    }

    /// Renders everything first, then creates `dir` and writes each file
    /// through a temporary name, so a failure leaves no partial artifact
    /// under its final name.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let files = self.render()?;
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let mut staged = Vec::with_capacity(files.len());
        for (name, bytes) in &files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(e).with_context(|| format!("writing {}", tmp.display()));
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dst) in staged {
            fs::rename(&tmp, &dst).with_context(|| format!("moving {} into place", dst.display()))?;
        }
        Ok(())
    }
}

/// Shortest round-trip decimal of `x`, as used in the CSV tables.
pub fn cell(x: f64) -> String {
    format!("{x:e}")
}
