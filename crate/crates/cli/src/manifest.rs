//! Run manifests: every command records the exact config and input digests
//! that produced its artifact, enabling exact reruns. Manifests carry no
//! timestamps, so reruns from identical inputs are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: Option<u64>,
    pub config_digest: String,
    /// Input path → digest.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the artifact dir) → digest.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config_digest: String) -> Manifest {
        Manifest {
            command: command.to_string(),
            seed,
            config_digest,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .insert(path.display().to_string(), digest_file(path)?);
        Ok(())
    }

    /// Digest every regular file under `dir` (the artifact itself).
    pub fn add_outputs_from_dir(&mut self, dir: &Path) -> Result<(), CliError> {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_file() && path.file_name().is_some_and(|n| n != "manifest.json") {
                let name = path
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .to_string();
                self.outputs.insert(name, digest_file(&path)?);
            } else if path.is_dir() {
                let prefix = path.file_name().unwrap().to_string_lossy().to_string();
                let mut nested: Vec<_> = fs::read_dir(&path)
                    .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))?
                    .filter_map(|e| e.ok())
                    .map(|e| e.path())
                    .collect();
                nested.sort();
                for file in nested.into_iter().filter(|p| p.is_file()) {
                    let name = format!("{prefix}/{}", file.file_name().unwrap().to_string_lossy());
                    self.outputs.insert(name, digest_file(&file)?);
                }
            }
        }
        Ok(())
    }

    /// Write `manifest.json` into the artifact directory.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::Internal(format!("serializing manifest: {e}")))?;
        bytes.push(b'\n');
        fs::write(&path, bytes)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(digest_bytes(&bytes))
}
