//! Content-hashed stage outputs. Every command writes into its own directory
//! under the output root together with a `manifest.json` listing the SHA-256
//! of each input and output file, and a `metadata.json` holding anything that
//! varies between runs (timestamps, wall times). Downstream commands check the
//! manifests of the stages they read from.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const METADATA: &str = "metadata.json";

/// Embedded in every manifest and report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        let versions = [
            ("rnnbof".to_string(), rnnbof::VERSION.to_string()),
            (
                "rnnbof-cli".to_string(),
                env!("CARGO_PKG_VERSION").to_string(),
            ),
        ]
        .into_iter()
        .collect();
        Self {
            config_hash,
            seed,
            versions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub provenance: Provenance,
    /// Upstream files, keyed by path relative to the output root.
    pub inputs: BTreeMap<String, String>,
    /// Files of this stage, keyed by name within the stage directory.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(sha256_bytes(&bytes))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

/// Collects the files of one stage and writes the manifest last.
pub struct StageWriter {
    root: PathBuf,
    rel_dir: String,
    stage: String,
    outputs: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    metadata: BTreeMap<String, serde_json::Value>,
}

impl StageWriter {
    /// Prepares `root/rel_dir`, removing files left by an earlier run of the
    /// same stage.
    pub fn create(root: &Path, rel_dir: &str, stage: &str) -> Result<Self> {
        let dir = root.join(rel_dir);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Self {
            root: root.to_path_buf(),
            rel_dir: rel_dir.to_string(),
            stage: stage.to_string(),
            outputs: BTreeMap::new(),
            inputs: BTreeMap::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> PathBuf {
        self.root.join(&self.rel_dir)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir().join(name);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.outputs.insert(name.to_string(), sha256_bytes(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &to_json_bytes(value))
    }

    /// Records the outputs of an upstream manifest as inputs of this stage.
    pub fn record_inputs(&mut self, upstream: &VerifiedStage) {
        for (name, hash) in &upstream.manifest.outputs {
            self.inputs
                .insert(format!("{}/{}", upstream.rel_dir, name), hash.clone());
        }
    }

    /// Records a file outside the output root, such as a user cohort.
    pub fn record_external_input(&mut self, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn metadata(&mut self, key: &str, value: serde_json::Value) {
        self.metadata.insert(key.to_string(), value);
    }

    pub fn finish(mut self, provenance: &Provenance) -> Result<Manifest> {
        let manifest = Manifest {
            stage: self.stage.clone(),
            provenance: provenance.clone(),
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
        };
        self.metadata.insert(
            "created_at".into(),
            serde_json::Value::String(chrono::Utc::now().to_rfc3339()),
        );
        self.metadata.insert(
            "stage".into(),
            serde_json::Value::String(self.stage.clone()),
        );
        let dir = self.dir();
        let meta = dir.join(METADATA);
        fs::write(&meta, to_json_bytes(&self.metadata)).map_err(CliError::io(&meta))?;
        let path = dir.join(MANIFEST);
        fs::write(&path, to_json_bytes(&manifest)).map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}

/// A stage whose manifest exists and whose outputs still match it.
#[derive(Clone, Debug)]
pub struct VerifiedStage {
    pub dir: PathBuf,
    pub rel_dir: String,
    pub manifest: Manifest,
}

impl VerifiedStage {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn read(&self, name: &str) -> Result<Vec<u8>> {
        let p = self.path(name);
        fs::read(&p).map_err(CliError::io(&p))
    }

    pub fn read_string(&self, name: &str) -> Result<String> {
        String::from_utf8(self.read(name)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", self.path(name).display())))
    }
}

/// Checks that `root/rel_dir` holds a manifest written by `stage` and that
/// every listed output still has its recorded hash.
pub fn verify_stage(root: &Path, rel_dir: &str, stage: &str) -> Result<VerifiedStage> {
    let dir = root.join(rel_dir);
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Err(CliError::MissingArtifact {
            path,
            stage: stage.to_string(),
        });
    }
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for (name, expected) in &manifest.outputs {
        let file = dir.join(name);
        if !file.exists() {
            return Err(CliError::MissingArtifact {
                path: file,
                stage: stage.to_string(),
            });
        }
        let found = sha256_file(&file)?;
        if &found != expected {
            return Err(CliError::HashMismatch {
                path: file,
                stage: stage.to_string(),
                expected: expected.clone(),
                found,
            });
        }
    }
    Ok(VerifiedStage {
        dir,
        rel_dir: rel_dir.to_string(),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tampering_is_detected() {
        let root = tempfile::tempdir().unwrap();
        let prov = Provenance::new("h".into(), 1);
        let mut w = StageWriter::create(root.path(), "stage", "demo").unwrap();
        w.write("a.txt", b"hello").unwrap();
        w.finish(&prov).unwrap();
        let v = verify_stage(root.path(), "stage", "demo").unwrap();
        assert_eq!(v.read_string("a.txt").unwrap(), "hello");

        fs::write(root.path().join("stage/a.txt"), b"changed").unwrap();
        assert!(matches!(
            verify_stage(root.path(), "stage", "demo"),
            Err(CliError::HashMismatch { .. })
        ));
        fs::remove_file(root.path().join("stage/a.txt")).unwrap();
        assert!(matches!(
            verify_stage(root.path(), "stage", "demo"),
            Err(CliError::MissingArtifact { .. })
        ));
        assert!(matches!(
            verify_stage(root.path(), "nowhere", "demo"),
            Err(CliError::MissingArtifact { .. })
        ));
    }
}
