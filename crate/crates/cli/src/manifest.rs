use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Record of one run.  Written even when the run fails; carries no clock
/// readings so that identical inputs give identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub schema_version: u32,
    pub config_sha256: Option<String>,
    pub config: serde_json::Value,
    pub threads: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub measurements: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub status: String,
    pub error: Option<String>,
    pub exit_code: i32,
}

impl Manifest {
    pub fn new(command: &str, threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            schema_version: crate::config::SCHEMA_VERSION,
            config_sha256: None,
            config: serde_json::Value::Null,
            threads,
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
            measurements: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            status: "running".into(),
            error: None,
            exit_code: 0,
        }
    }

    pub fn set_config(&mut self, bytes: &[u8]) {
        self.config_sha256 = Some(format!("{:x}", Sha256::digest(bytes)));
        self.config = serde_json::from_slice(bytes).unwrap_or(serde_json::Value::Null);
    }

    /// `value <= tolerance` passes; NaN fails.
    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let pass = value <= tolerance;
        self.checks.push(Check { name: name.to_string(), value, tolerance, pass });
        pass
    }

    pub fn measure(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.measurements.insert(name.to_string(), v);
    }

    pub fn output(&mut self, path: &Path) -> PathBuf {
        self.outputs.push(path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
        path.to_path_buf()
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}
