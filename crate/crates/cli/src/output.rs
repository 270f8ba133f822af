//! Writing artifacts and the run manifest. Files are staged under
//! temporary names and renamed into place only after all of them were
//! written; on failure the staged and already-renamed files are removed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Artifact, CliError};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub config_file: String,
    pub overrides: Vec<String>,
    pub seed: u64,
    pub workers: usize,
    pub artifacts: Vec<ArtifactEntry>,
    pub duration_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn staged(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!(".{name}.partial"))
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

/// Writes every artifact or none of them.
pub fn commit(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let fail = |e: std::io::Error, what: &Path| CliError::Io(format!("{}: {e}", what.display()));
    fs::create_dir_all(dir).map_err(|e| fail(e, dir))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for a in artifacts {
            let tmp = staged(dir, &a.name);
            written.push(tmp.clone());
            write_file(&tmp, &a.bytes).map_err(|e| fail(e, &tmp))?;
        }
        for a in artifacts {
            let tmp = staged(dir, &a.name);
            let dst = dir.join(&a.name);
            fs::rename(&tmp, &dst).map_err(|e| fail(e, &dst))?;
            written.push(dst);
        }
        Ok(())
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let mut json = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    let tmp = staged(dir, MANIFEST);
    let dst = dir.join(MANIFEST);
    write_file(&tmp, &json)
        .and_then(|_| fs::rename(&tmp, &dst))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            CliError::Io(format!("{}: {e}", dst.display()))
        })
}

pub fn entries(artifacts: &[Artifact]) -> Vec<ArtifactEntry> {
    artifacts
        .iter()
        .map(|a| ArtifactEntry { file: a.name.clone(), rows: a.rows, sha256: sha256_hex(&a.bytes) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn commit_leaves_no_staging_files() {
        let dir = std::env::temp_dir().join(format!("mobidiff-commit-{}", std::process::id()));
        let a = Artifact { name: "a.csv".into(), bytes: b"x\n1\n".to_vec(), rows: 1 };
        commit(&dir, &[a]).unwrap();
        let names: Vec<String> =
            fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["a.csv"]);
        fs::remove_dir_all(&dir).unwrap();
    }
}
