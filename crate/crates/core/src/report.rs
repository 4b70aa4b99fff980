//! JSON run reports and content-addressed artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// One checked property with its measured value.
#[derive(Clone, Debug, Serialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    /// Measured defect or statistic; `null` when not finite.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Invariant {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Invariant { name: name.into(), pass: value <= tolerance, value: finite(value), tolerance: Some(tolerance), detail: None }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Invariant { name: name.into(), pass, value: None, tolerance: None, detail: None }
    }

    /// A failed invariant recording an error raised while checking it.
    pub fn error(name: impl Into<String>, err: &dyn std::fmt::Display) -> Self {
        Invariant { name: name.into(), pass: false, value: None, tolerance: None, detail: Some(Value::String(err.to_string())) }
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = finite(v);
        self
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = Some(serde_json::to_value(detail).unwrap_or(Value::Null));
        self
    }
}

/// A file written next to the report.
#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub name: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: String,
    pub pass: bool,
    pub invariants: Vec<Invariant>,
    pub artifacts: Vec<Artifact>,
    #[serde(skip)]
    pending: Vec<(String, String, String)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section { name: name.into(), pass: true, invariants: vec![], artifacts: vec![], pending: vec![] }
    }

    pub fn push(&mut self, inv: Invariant) {
        if !inv.pass {
            log::warn!("{}: {} failed", self.name, inv.name);
        }
        self.pass &= inv.pass;
        self.invariants.push(inv);
    }

    /// Record an invariant from a fallible check; errors become failures.
    pub fn check(&mut self, name: &str, r: Result<Invariant>) {
        match r {
            Ok(inv) => self.push(inv),
            Err(e) => self.push(Invariant::error(name, &e)),
        }
    }

    /// Queue a CSV dump; it is written by [`Report::write`].
    pub fn csv(&mut self, name: &str, contents: String) {
        let hash = sha256_hex(contents.as_bytes());
        let file = format!("{}-{}-{}.csv", self.name, name, &hash[..16]);
        self.artifacts.push(Artifact { name: name.into(), file: file.clone(), sha256: hash });
        self.pending.push((name.into(), file, contents));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub config_sha256: String,
    pub pass: bool,
    pub sections: Vec<Section>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Report {
    pub fn new(subcommand: &str, seed: u64, config_json: &str) -> Self {
        Report {
            tool: "solvrigid",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            seed,
            config_sha256: sha256_hex(config_json.as_bytes()),
            pass: true,
            sections: vec![],
        }
    }

    pub fn add(&mut self, s: Section) {
        self.pass &= s.pass;
        self.sections.push(s);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write artifacts and the report into `dir`; the report is named
    /// `report-<sha256 of its bytes>.json`. Existing files are left alone.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        for s in &self.sections {
            for (_, file, contents) in &s.pending {
                write_once(&dir.join(file), contents.as_bytes())?;
            }
        }
        let body = self.to_json();
        let path = dir.join(format!("report-{}.json", sha256_hex(body.as_bytes())));
        write_once(&path, body.as_bytes())?;
        Ok(path)
    }
}

fn write_once(path: &Path, bytes: &[u8]) -> Result<()> {
    if !path.exists() {
        std::fs::write(path, bytes)?;
    }
    Ok(())
}
