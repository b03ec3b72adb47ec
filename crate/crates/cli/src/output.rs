//! Result files: deterministic artefacts plus the manifest, and a separate
//! metadata file holding everything that varies between reruns.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Resolved, SCHEMA_VERSION};
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects the files one command writes into its output directory.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes `manifest.json` (stable across reruns) and `metadata.json`
    /// (timestamps and runtime).
    pub fn finish(mut self, command: &str, r: &Resolved, started: SystemTime) -> Result<(), CliError> {
        let mut files = self.files.clone();
        files.sort();
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command,
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: &r.config_sha256,
            seed: r.seed,
            cycles: matches!(command, "tail" | "psbj").then_some(r.cycles),
            trials: (command == "verify").then_some(r.trials),
            files,
            metadata: "metadata.json",
        };
        self.json("manifest.json", &manifest)?;
        let finished = SystemTime::now();
        let since = |t: SystemTime| t.duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO).as_secs_f64();
        let metadata = Metadata {
            started_unix: since(started),
            finished_unix: since(finished),
            runtime_seconds: finished.duration_since(started).unwrap_or(Duration::ZERO).as_secs_f64(),
            workers: r.workers,
            threads_available: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        self.json("metadata.json", &metadata)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    artifact: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycles: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    files: Vec<String>,
    metadata: &'a str,
}

#[derive(Serialize)]
struct Metadata {
    started_unix: f64,
    finished_unix: f64,
    runtime_seconds: f64,
    /// Requested pool size; results do not depend on it.
    workers: usize,
    threads_available: usize,
}
