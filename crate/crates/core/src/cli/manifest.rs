//! Run manifests: what a command read and wrote, with content hashes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub path: PathBuf,
    pub sha256: String,
}

impl ArtifactRef {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(ArtifactRef {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// `<artifact>.manifest.json`, next to the artifact (or directory).
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(MANIFEST_SUFFIX);
    PathBuf::from(s)
}

/// Expands a directory into its files (sorted); a file stays as is.
pub fn artifact_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn hash_all(paths: &[PathBuf]) -> Result<Vec<ArtifactRef>> {
    let mut refs = Vec::new();
    for p in paths {
        for f in artifact_files(p)? {
            refs.push(ArtifactRef::of(&f)?);
        }
    }
    Ok(refs)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Every referenced input and output still exists and hashes to the
    /// recorded value.
    pub fn verify(&self) -> Result<()> {
        for a in self.inputs.iter().chain(&self.outputs) {
            if !a.path.exists() {
                return Err(Error::Manifest(format!("{} is missing", a.path.display())));
            }
            let now = sha256_file(&a.path)?;
            if now != a.sha256 {
                return Err(Error::Manifest(format!(
                    "{} changed since it was written (sha256 {} != {})",
                    a.path.display(),
                    now,
                    a.sha256
                )));
            }
        }
        Ok(())
    }
}

/// Checks the manifest written alongside `artifact`, if there is one.
pub fn verify_sibling(artifact: &Path) -> Result<()> {
    let m = manifest_path(artifact);
    if m.exists() {
        RunManifest::read(&m)?.verify()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_abc() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        fs::write(&p, "{}").unwrap();
        let m = RunManifest {
            tool_version: "0".into(),
            command: "test".into(),
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            inputs: vec![],
            outputs: hash_all(std::slice::from_ref(&p)).unwrap(),
            started_unix: 0,
            finished_unix: 0,
        };
        m.write(&manifest_path(&p)).unwrap();
        verify_sibling(&p).unwrap();
        fs::write(&p, "{ }").unwrap();
        let err = verify_sibling(&p).unwrap_err();
        assert_eq!(err.category(), "manifest");
        fs::remove_file(&p).unwrap();
        assert!(verify_sibling(&p).is_err());
    }
}
