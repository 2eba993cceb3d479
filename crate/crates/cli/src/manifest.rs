use std::fs::File;
use std::io::{self, Read};
use std::path::Path;
use std::time::Instant;

use embeval::{Error, Result, SCHEMA_VERSION};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance attached to every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    pub schema_version: String,
    pub seeds: Vec<u64>,
    pub duration_ms: u64,
}

pub struct ManifestBuilder {
    started: Instant,
    command_line: Vec<String>,
    inputs: Vec<InputDigest>,
    seeds: Vec<u64>,
}

impl ManifestBuilder {
    pub fn start() -> Self {
        Self {
            started: Instant::now(),
            command_line: std::env::args().collect(),
            inputs: Vec::new(),
            seeds: Vec::new(),
        }
    }

    /// Record the SHA-256 of an input file.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            command_line: self.command_line,
            inputs: self.inputs,
            tool_version: TOOL_VERSION.to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
            seeds: self.seeds,
            duration_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// A report with its manifest appended as a `manifest` field.
#[derive(Serialize)]
pub struct WithManifest<'a, T: Serialize> {
    #[serde(flatten)]
    pub report: &'a T,
    pub manifest: RunManifest,
}
