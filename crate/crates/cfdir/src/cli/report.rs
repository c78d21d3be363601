//! Run report and artifact manifest.
//!
//! Every command updates `run_report.json` in the output directory: its own
//! result section, a wall-clock timing entry, and a content hash for every
//! artifact it wrote. Wall-clock numbers live only here; all other artifact
//! files are byte-deterministic functions of (config, seed).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::config::RunConfig;
use crate::directions::DirectionReport;
use crate::error::{Error, Result};
use crate::proxy::TrainReport;
use crate::textio;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "run_report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub source_id: Option<String>,
    pub proxy: Option<TrainReport>,
    pub directions: Vec<DirectionReport>,
    pub combined: Option<DirectionReport>,
    pub timings: Vec<StageTiming>,
    pub manifest: Vec<ManifestEntry>,
}

impl RunReport {
    pub fn new(config: RunConfig) -> RunReport {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            source_id: None,
            proxy: None,
            directions: Vec::new(),
            combined: None,
            timings: Vec::new(),
            manifest: Vec::new(),
        }
    }

    pub fn path_in(out_dir: &Path) -> PathBuf {
        out_dir.join(REPORT_FILE)
    }

    pub fn load(out_dir: &Path) -> Result<RunReport> {
        let report: RunReport = textio::read_json_file(&Self::path_in(out_dir))?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "report schema version {} (expected {REPORT_SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        textio::write_json_file(&Self::path_in(out_dir), self)
    }

    /// Hashes an artifact and upserts its manifest entry. Paths are stored
    /// relative to the output directory; the manifest stays sorted by path.
    pub fn record_artifact(&mut self, out_dir: &Path, relative: &str) -> Result<()> {
        let sha256 = textio::sha256_file(&out_dir.join(relative))?;
        let entry = ManifestEntry {
            path: relative.to_string(),
            sha256,
        };
        match self
            .manifest
            .binary_search_by(|e| e.path.as_str().cmp(relative))
        {
            Ok(i) => self.manifest[i] = entry,
            Err(i) => self.manifest.insert(i, entry),
        }
        Ok(())
    }

    pub fn record_timing(&mut self, stage: &str, seconds: f64) {
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
    }

    /// Drops manifest entries under a path prefix; used when a command
    /// replaces a whole artifact subtree so stale files cannot linger in the
    /// manifest.
    pub fn drop_manifest_prefix(&mut self, prefix: &str) {
        self.manifest.retain(|e| !e.path.starts_with(prefix));
    }

    /// Re-hashes every manifest entry; any missing or changed file fails.
    pub fn verify_manifest(&self, out_dir: &Path) -> Result<()> {
        for entry in &self.manifest {
            let path = out_dir.join(&entry.path);
            if !path.is_file() {
                return Err(Error::Verification(format!(
                    "missing artifact {}",
                    entry.path
                )));
            }
            let actual = textio::sha256_file(&path)?;
            if actual != entry.sha256 {
                return Err(Error::Verification(format!(
                    "hash mismatch for {}: recorded {}, found {actual}",
                    entry.path, entry.sha256
                )));
            }
        }
        Ok(())
    }
}
