use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use geoloc_core::Media;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub media: Media,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub created_unix: u64,
    pub inputs: Vec<FileRecord>,
    pub artifacts: Vec<FileRecord>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

impl Manifest {
    pub fn new(command: &str, media: Media, config_hash: String, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            media,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        if !self.inputs.iter().any(|r| r.path == path) {
            self.inputs.push(FileRecord {
                path: path.to_path_buf(),
                sha256: sha256_file(path)?,
            });
        }
        Ok(())
    }

    pub fn add_artifact(&mut self, path: &Path) -> Result<(), CliError> {
        self.artifacts.push(FileRecord {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Writes `manifest-<command>-<media>.json` into `dir` and returns its
    /// path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("manifest-{}-{}.json", self.command, self.media));
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
