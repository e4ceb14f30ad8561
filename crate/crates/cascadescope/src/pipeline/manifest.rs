//! Run manifests: per-stage parameter echo, input/output content digests,
//! and seeds. The manifest file is fully deterministic for deterministic
//! stages; wall-clock timings go to a sidecar so reruns produce identical
//! manifest bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRun {
    pub stage: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub runs: Vec<StageRun>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path)
        .map_err(|e| PipelineError::Internal(format!("cannot digest {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn digest_paths(paths: &[PathBuf]) -> Result<Vec<FileDigest>, PipelineError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if !path.exists() {
            return Ok(Self {
                version: env!("CARGO_PKG_VERSION").to_string(),
                runs: Vec::new(),
            });
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Internal(format!("cannot read manifest: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Internal(format!("bad manifest {}: {e}", path.display())))
    }

    /// Append one run and rewrite atomically (temp file + rename in the
    /// manifest's directory).
    pub fn append_atomic(path: &Path, run: StageRun) -> Result<(), PipelineError> {
        let mut manifest = Self::load(path)?;
        manifest.version = env!("CARGO_PKG_VERSION").to_string();
        manifest.runs.push(run);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, json)
            .map_err(|e| PipelineError::Internal(format!("cannot write manifest: {e}")))?;
        std::fs::rename(&tmp, path)
            .map_err(|e| PipelineError::Internal(format!("cannot rename manifest: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub entries: Vec<(String, u128)>,
}

/// Wall-clock sidecar next to the manifest; intentionally separate so
/// manifest bytes stay reproducible across runs.
pub fn record_timing(manifest_path: &Path, stage: &str, wall_ms: u128) {
    let path = timings_path(manifest_path);
    let mut timings: Timings = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    timings.entries.push((stage.to_string(), wall_ms));
    if let Ok(json) = serde_json::to_string_pretty(&timings) {
        let _ = std::fs::write(&path, json);
    }
}

pub fn timings_path(manifest_path: &Path) -> PathBuf {
    let mut name = manifest_path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "manifest.json".to_string());
    name.push_str(".timings.json");
    manifest_path.with_file_name(name)
}
