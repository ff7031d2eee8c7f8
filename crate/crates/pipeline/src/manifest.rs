//! Per-model manifests with content hashes and atomic artifact writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::PipelineError;

pub const MANIFEST_SCHEMA: &str = "a2z-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_bytes(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    Ok(sha256_bytes(&fs::read(path)?))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Runs `write` against a temporary sibling and renames it into place, so the
/// final path holds either the previous content or the complete new file.
pub fn atomic_write_with<E>(path: &Path, write: impl FnOnce(&Path) -> Result<(), E>) -> Result<(), PipelineError>
where
    PipelineError: From<E>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = temp_path(path);
    match write(&tmp) {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    atomic_write_with(path, |tmp| -> Result<(), PipelineError> {
        let mut f = fs::File::create(tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the model directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub artifacts: BTreeMap<String, Artifact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub schema: String,
    pub model_id: String,
    pub chunk: String,
    /// Input paths relative to the dataset root.
    pub brep: String,
    pub mesh: String,
    pub input_sha256: BTreeMap<String, String>,
    pub seed: u64,
    /// Last completed stage: validated, scanned, annotated, sketched or evaluated.
    pub status: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl ModelManifest {
    pub fn new(model_id: &str, chunk: &str, brep: String, mesh: String, seed: u64) -> Self {
        ModelManifest {
            schema: MANIFEST_SCHEMA.into(),
            model_id: model_id.into(),
            chunk: chunk.into(),
            brep,
            mesh,
            input_sha256: BTreeMap::new(),
            seed,
            status: "pending".into(),
            stages: BTreeMap::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
        let m: ModelManifest = serde_json::from_str(&text).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(PipelineError::Manifest(format!("unexpected schema {:?}", m.schema)));
        }
        Ok(m)
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        atomic_write(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Hashes `rel` (already written under `dir`) into the record of `stage`.
    pub fn record(&mut self, dir: &Path, stage: &str, name: &str, rel: &str) -> Result<(), PipelineError> {
        let sha256 = sha256_file(&dir.join(rel))?;
        self.stages.entry(stage.into()).or_default().artifacts.insert(name.into(), Artifact { path: rel.into(), sha256 });
        Ok(())
    }

    /// Path of a recorded artifact after re-hashing it against the manifest.
    pub fn verified(&self, dir: &Path, stage: &str, name: &str) -> Result<PathBuf, PipelineError> {
        let a = self
            .stages
            .get(stage)
            .and_then(|s| s.artifacts.get(name))
            .ok_or_else(|| PipelineError::MissingStage(format!("{stage}/{name}")))?;
        let path = dir.join(&a.path);
        let got = sha256_file(&path)?;
        if got != a.sha256 {
            return Err(PipelineError::Corrupt(format!("{} (sha256 {got}, manifest {})", a.path, a.sha256)));
        }
        Ok(path)
    }

    /// Re-hashes every recorded artifact.
    pub fn verify_all(&self, dir: &Path) -> Result<(), PipelineError> {
        for (stage, rec) in &self.stages {
            for name in rec.artifacts.keys() {
                self.verified(dir, stage, name)?;
            }
        }
        Ok(())
    }

    /// `stage/name → sha256` over every recorded artifact.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .flat_map(|(s, r)| r.artifacts.iter().map(move |(n, a)| (format!("{s}/{n}"), a.sha256.clone())))
            .collect()
    }

    /// Drops the records of `stage` and every later stage.
    pub fn reset_from(&mut self, stage: &str) {
        if let Some(i) = crate::STAGES.iter().position(|s| *s == stage) {
            for s in &crate::STAGES[i..] {
                self.stages.remove(*s);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_bytes(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("sub/a.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
        let failed = atomic_write_with(&p, |tmp| -> Result<(), PipelineError> {
            fs::write(tmp, b"partial")?;
            Err(PipelineError::Config("interrupted".into()))
        });
        assert!(failed.is_err());
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn corruption_detected() {
        let d = tempfile::tempdir().unwrap();
        fs::write(d.path().join("x.bin"), b"payload").unwrap();
        let mut m = ModelManifest::new("m", "chunk_0000", "b".into(), "m".into(), 1);
        m.record(d.path(), "scan", "mesh", "x.bin").unwrap();
        m.save(d.path()).unwrap();
        let back = ModelManifest::load(d.path()).unwrap();
        assert_eq!(back, m);
        back.verify_all(d.path()).unwrap();
        fs::write(d.path().join("x.bin"), b"payloaD").unwrap();
        assert!(matches!(back.verified(d.path(), "scan", "mesh"), Err(PipelineError::Corrupt(_))));
        assert!(matches!(back.verified(d.path(), "annotate", "mesh"), Err(PipelineError::MissingStage(_))));
    }
}
