//! Report assembly and output files.
//!
//! `report.json` depends only on the scenario bytes, the effective
//! configuration and the build, so two runs of the same scenario produce
//! identical files. Wall-clock timings go to `timing.json` instead.

use crate::config::ScenarioConfig;
use anyhow::{Context, Result};
use blowup_core::{Status, Verdict};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const ARTIFACT: &str = "blowup";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TIMING_FILE: &str = "timing.json";

/// A pass/fail property that has no numeric tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Every verdict and check passed or warned.
    Pass,
    /// At least one verdict or check failed.
    Fail,
    /// Some computation raised an error; the report is partial.
    Error,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Error => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub artifact: &'static str,
    pub artifact_version: &'static str,
    pub command: String,
    pub scenario: String,
    pub input_sha256: String,
    pub variant: String,
    pub config: ScenarioConfig,
    pub predictions: BTreeMap<String, serde_json::Value>,
    pub fits: BTreeMap<String, serde_json::Value>,
    pub verdicts: Vec<Verdict>,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
    /// CSV files written next to the report, in write order.
    pub traces: Vec<String>,
    pub timing: &'static str,
    pub outcome: Outcome,
}

impl Report {
    pub fn new(command: &str, config: ScenarioConfig, input: &[u8], variant: blowup_core::Variant) -> Self {
        Self {
            artifact: ARTIFACT,
            artifact_version: ARTIFACT_VERSION,
            command: command.into(),
            scenario: config.name.clone(),
            input_sha256: sha256_hex(input),
            variant: variant.label().into(),
            config,
            predictions: BTreeMap::new(),
            fits: BTreeMap::new(),
            verdicts: Vec::new(),
            checks: Vec::new(),
            errors: Vec::new(),
            traces: Vec::new(),
            timing: TIMING_FILE,
            outcome: Outcome::Pass,
        }
    }

    pub fn predict(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.predictions.insert(key.into(), to_value(value));
    }

    pub fn fit(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.fits.insert(key.into(), to_value(value));
    }

    pub fn error(&mut self, context: &str, err: impl std::fmt::Display) {
        self.errors.push(format!("{context}: {err}"));
    }

    pub fn finish(&mut self) -> Outcome {
        let failed = self.verdicts.iter().map(|v| v.status).chain(self.checks.iter().map(|c| c.status)).any(|s| s == Status::Fail);
        self.outcome = if !self.errors.is_empty() {
            Outcome::Error
        } else if failed {
            Outcome::Fail
        } else {
            Outcome::Pass
        };
        self.outcome
    }
}

fn to_value(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Wall-clock stage timings, kept apart from the deterministic report.
#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub command: String,
    pub jobs: usize,
    pub stages: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

impl Timing {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        *self.stages.entry(stage.into()).or_default() += t0.elapsed().as_secs_f64();
        out
    }
}

/// Writes into the output directory and records CSV file names on the report.
pub struct Sink {
    dir: PathBuf,
}

impl Sink {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<R: Serialize>(&self, report: &mut Report, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        report.traces.push(name.into());
        Ok(())
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
