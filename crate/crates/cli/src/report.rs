//! Schema-versioned JSON reports, CSV tables, run manifests and fixture comparison.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Kind, RunConfig};

/// Version embedded in every artifact; readers reject a newer major.
pub const SCHEMA_VERSION: &str = "1.0.0";
/// Relative tolerance of fixture comparisons.
pub const FIXTURE_RTOL: f64 = 1e-9;

/// Top-level `report.json` content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub kind: Kind,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    pub config: RunConfig,
    pub result: Value,
}

/// `manifest.json`: what a run completed and wrote.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub status: String,
    pub completed_trajectories: usize,
    pub failed_trajectories: Vec<usize>,
    pub files: Vec<String>,
    pub errors: Vec<String>,
    pub fixture_mismatches: Option<Vec<String>>,
}

/// `timing.json`: kept apart from the report so reports stay byte-identical.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub schema_version: String,
    pub wall_seconds: f64,
    pub threads: usize,
}

/// A CSV table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Formats a float for CSV with round-trip precision; `None` is empty.
pub fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical (serde field order) JSON of `config`.
pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("config serializes"))
}

impl Report {
    pub fn new(kind: Kind, config: &RunConfig, result: Value) -> Self {
        Self { schema_version: SCHEMA_VERSION.into(), kind, config_hash: config_hash(config), config: config.clone(), result }
    }
}

fn major(version: &str) -> Result<u64> {
    version.split('.').next().and_then(|m| m.parse().ok()).with_context(|| format!("malformed schema_version `{version}`"))
}

/// Parses a report, rejecting artifacts with a newer major schema version.
pub fn parse_report(text: &str) -> Result<Report> {
    let raw: Value = serde_json::from_str(text).context("report is not JSON")?;
    let version = raw.get("schema_version").and_then(Value::as_str).context("report has no schema_version")?;
    if major(version)? > major(SCHEMA_VERSION)? {
        bail!("report schema {version} is newer than supported {SCHEMA_VERSION}");
    }
    serde_json::from_value(raw).context("report does not match the schema")
}

/// Reads a report file.
pub fn read_report(path: &Path) -> Result<Report> {
    parse_report(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

/// Numeric comparison of two JSON trees; returns mismatching paths.
pub fn compare_values(expected: &Value, actual: &Value, rtol: f64) -> Vec<String> {
    let mut out = Vec::new();
    walk(expected, actual, rtol, "$", &mut out);
    out
}

fn walk(e: &Value, a: &Value, rtol: f64, path: &str, out: &mut Vec<String>) {
    match (e, a) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            if (x - y).abs() > rtol * x.abs().max(y.abs()).max(1e-300) && x != y {
                out.push(format!("{path}: {x} vs {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                walk(p, q, rtol, &format!("{path}[{i}]"), out);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            for (k, p) in x {
                match y.get(k) {
                    Some(q) => walk(p, q, rtol, &format!("{path}.{k}"), out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
            for k in y.keys().filter(|k| !x.contains_key(*k)) {
                out.push(format!("{path}.{k}: unexpected"));
            }
        }
        _ if e != a => out.push(format!("{path}: {e} vs {a}")),
        _ => {}
    }
}

/// Writes artifacts into one output directory and records them in the manifest.
pub struct OutputDir {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let manifest = Manifest { schema_version: SCHEMA_VERSION.into(), status: "running".into(), ..Manifest::default() };
        Ok(Self { root: root.to_path_buf(), manifest })
    }

    fn record(&mut self, name: &str) {
        if !self.manifest.files.iter().any(|f| f == name) {
            self.manifest.files.push(name.into());
        }
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.root.join(name), text).with_context(|| format!("writing {name}"))?;
        self.record(name);
        Ok(())
    }

    pub fn write_table(&mut self, table: &Table) -> Result<()> {
        let name = format!("{}.csv", table.name);
        let mut w = csv::Writer::from_path(self.root.join(&name)).with_context(|| format!("writing {name}"))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.record(&name);
        Ok(())
    }

    /// Writes the manifest (call last; also called on failure to preserve partial output).
    pub fn finish(&mut self, status: &str) -> Result<()> {
        self.manifest.status = status.into();
        self.record("manifest.json");
        let m = self.manifest.clone();
        self.write_json("manifest.json", &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn newer_major_is_rejected() {
        let report = Report::new(Kind::Povm, &RunConfig::default(), Value::Null);
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(parse_report(&text).unwrap(), report);
        let newer = text.replace("\"1.0.0\"", "\"2.0.0\"");
        assert!(parse_report(&newer).unwrap_err().to_string().contains("newer"));
        let minor = text.replace("\"1.0.0\"", "\"1.4.0\"");
        assert!(parse_report(&minor).is_ok());
    }

    #[test]
    fn fixture_comparison_reports_paths() {
        let a: Value = serde_json::json!({"x": [1.0, 2.0], "y": {"z": 3.0}, "s": "a"});
        let b: Value = serde_json::json!({"x": [1.0, 2.0 + 1e-12], "y": {"z": 3.1}, "s": "a"});
        let d = compare_values(&a, &b, FIXTURE_RTOL);
        assert_eq!(d.len(), 1);
        assert!(d[0].starts_with("$.y.z"));
    }
}
