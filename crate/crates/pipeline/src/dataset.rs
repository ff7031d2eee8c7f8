//! Dataset layout: `<root>/chunk_NNNN/<model>.brep.json` next to
//! `<model>.ply` or `<model>.obj`.

use std::fs;
use std::path::{Path, PathBuf};

use a2z_core::fixtures::Fixture;
use a2z_core::mesh::{write_ply, PlyFormat};

use crate::config::{chunk_name, chunk_number, ChunkRange, PipelineConfig};
use crate::manifest::{atomic_write, atomic_write_with};
use crate::PipelineError;

pub const BREP_SUFFIX: &str = ".brep.json";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelJob {
    pub chunk: String,
    pub model_id: String,
    pub brep: PathBuf,
    pub mesh: PathBuf,
}

fn mesh_for(dir: &Path, id: &str) -> PathBuf {
    ["ply", "obj"].iter().map(|e| dir.join(format!("{id}.{e}"))).find(|p| p.is_file()).unwrap_or_else(|| dir.join(format!("{id}.ply")))
}

/// Models in chunk order, then model id order, restricted to `range`.
pub fn discover(cfg: &PipelineConfig, range: Option<&ChunkRange>) -> Result<Vec<ModelJob>, PipelineError> {
    let root = &cfg.io.input;
    let mut layout: Vec<(String, Vec<String>)> = Vec::new();
    if cfg.chunks.is_empty() {
        let mut chunks: Vec<String> = fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| chunk_number(n).is_some())
            .collect();
        chunks.sort();
        for c in chunks {
            let mut ids: Vec<String> = fs::read_dir(root.join(&c))?
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().to_string_lossy().strip_suffix(BREP_SUFFIX).map(str::to_string))
                .collect();
            ids.sort();
            layout.push((c, ids));
        }
    } else {
        layout.extend(cfg.chunks.iter().map(|(c, ids)| (c.clone(), ids.clone())));
    }
    let jobs: Vec<ModelJob> = layout
        .into_iter()
        .filter(|(c, _)| range.is_none_or(|r| chunk_number(c).is_some_and(|n| r.contains(n))))
        .flat_map(|(c, ids)| {
            let dir = root.join(&c);
            ids.into_iter().map(move |id| ModelJob { chunk: c.clone(), brep: dir.join(format!("{id}{BREP_SUFFIX}")), mesh: mesh_for(&dir, &id), model_id: id })
        })
        .collect();
    if jobs.is_empty() {
        return Err(PipelineError::NoModels(root.clone()));
    }
    Ok(jobs)
}

/// Writes fixtures as a dataset, `per_chunk` models per chunk directory.
pub fn write_fixture_dataset(root: &Path, fixtures: &[Fixture], per_chunk: usize) -> Result<Vec<ModelJob>, PipelineError> {
    let per_chunk = per_chunk.max(1);
    let mut jobs = Vec::new();
    for (i, f) in fixtures.iter().enumerate() {
        let chunk = chunk_name((i / per_chunk) as u32);
        let dir = root.join(&chunk);
        let brep = dir.join(format!("{}{BREP_SUFFIX}", f.name));
        let mesh = dir.join(format!("{}.ply", f.name));
        atomic_write(&brep, f.brep.to_record().to_json().as_bytes())?;
        atomic_write_with(&mesh, |p| write_ply(p, &f.mesh, PlyFormat::PlyBinary))?;
        jobs.push(ModelJob { chunk, model_id: f.name.clone(), brep, mesh });
    }
    Ok(jobs)
}
