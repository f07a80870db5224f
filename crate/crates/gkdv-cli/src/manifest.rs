//! Run manifest: config echo, code version, flags, wall clock, per-check
//! verdicts, and a checksummed file inventory. Written atomically at run
//! end, error or not.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_echo: String,
    pub threads: usize,
    pub containment_contaminated: bool,
    pub containment_slices: Vec<usize>,
    pub lower_bound_slices: Vec<usize>,
    pub wall_clock_seconds: f64,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<FileRecord>,
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_echo: String, threads: usize) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_echo,
            threads,
            containment_contaminated: false,
            containment_slices: Vec::new(),
            lower_bound_slices: Vec::new(),
            wall_clock_seconds: 0.0,
            checks: Vec::new(),
            files: Vec::new(),
            error: None,
        }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    /// Records a written artifact in the inventory (path relative to the
    /// output directory).
    pub fn record_file(&mut self, out_dir: &Path, path: &PathBuf) -> io::Result<()> {
        let bytes = fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.files.push(FileRecord {
            path: rel.to_string_lossy().into_owned(),
            bytes: bytes.len() as u64,
            sha256: hex,
        });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> io::Result<()> {
        let json = serde_json::to_vec_pretty(self).expect("manifest serialization is infallible");
        crate::out::write_atomic(&out_dir.join("manifest.json"), &json)
    }
}
