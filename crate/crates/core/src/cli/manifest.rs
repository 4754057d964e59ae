//! Run manifest: config echo, code version, wall times, emitted files with
//! checksums, decay reports, and named check results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decay::DecayReport;
use crate::error::{Error, Result};
use crate::solver::GuardRange;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Named scalar check with its threshold and comparison direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    /// "<=" or ">=" relating measured to threshold.
    pub cmp: String,
    pub detail: String,
}

impl CheckRecord {
    pub fn le(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            cmp: "<=".into(),
            detail: detail.into(),
        }
    }

    pub fn ge(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured >= threshold,
            measured,
            threshold,
            cmp: ">=".into(),
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct GuardSummary {
    pub v_min: f64,
    pub v_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl From<GuardRange> for GuardSummary {
    fn from(r: GuardRange) -> Self {
        Self { v_min: r.v_min, v_max: r.v_max, phi_min: r.phi_min, phi_max: r.phi_max }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileRecord>,
    pub reports: Vec<DecayReport>,
    pub checks: Vec<CheckRecord>,
    pub guard: Option<GuardSummary>,
    /// Diagnostic message when the run aborted mid-way.
    pub failure: Option<String>,
    pub passed: bool,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn now_unix() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Accumulates emitted files and results while an experiment runs, then
/// finalizes into the manifest.
pub struct ManifestBuilder {
    out_dir: PathBuf,
    experiment: String,
    seed: u64,
    config: BTreeMap<String, String>,
    started: f64,
    files: Vec<FileRecord>,
    reports: Vec<DecayReport>,
    checks: Vec<CheckRecord>,
    guard: Option<GuardSummary>,
    failure: Option<String>,
}

impl ManifestBuilder {
    pub fn new(
        out_dir: &Path,
        experiment: &str,
        seed: u64,
        config: BTreeMap<String, String>,
    ) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            experiment: experiment.to_string(),
            seed,
            config,
            started: now_unix(),
            files: Vec::new(),
            reports: Vec::new(),
            checks: Vec::new(),
            guard: None,
            failure: None,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Write a file into the run directory and record its checksum.
    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn report(&mut self, r: DecayReport) {
        self.reports.push(r);
    }

    pub fn check(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    pub fn guard(&mut self, g: GuardSummary) {
        self.guard = Some(g);
    }

    pub fn fail(&mut self, message: String) {
        self.failure = Some(message);
    }

    /// Finalize, write `manifest.json`, and return the manifest.
    pub fn finish(self) -> Result<RunManifest> {
        let passed = self.failure.is_none()
            && self.reports.iter().all(|r| r.pass)
            && self.checks.iter().all(|c| c.passed);
        let manifest = RunManifest {
            experiment: self.experiment,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            started_unix: self.started,
            finished_unix: now_unix(),
            files: self.files,
            reports: self.reports,
            checks: self.checks,
            guard: self.guard,
            failure: self.failure,
            passed,
        };
        let json = serde_json::to_vec_pretty(&manifest)?;
        std::fs::write(self.out_dir.join(MANIFEST_NAME), json)?;
        Ok(manifest)
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Recompute the checksum of every listed file and compare.
pub fn verify_manifest(path: &Path) -> Result<()> {
    let manifest = load_manifest(path)?;
    let dir = path
        .parent()
        .ok_or_else(|| Error::Manifest("manifest has no parent directory".into()))?;
    for file in &manifest.files {
        let full = dir.join(&file.path);
        let bytes = std::fs::read(&full)
            .map_err(|e| Error::Manifest(format!("missing file {}: {e}", file.path)))?;
        let digest = sha256_hex(&bytes);
        if digest != file.sha256 {
            return Err(Error::Manifest(format!(
                "checksum mismatch for {}: manifest {} vs file {}",
                file.path, file.sha256, digest
            )));
        }
    }
    Ok(())
}
