//! Batch driver: validate → synth-scan → annotate → sketch → eval → stats
//! over a chunked dataset, with per-model manifests and skip-and-record
//! error handling.

pub mod config;
pub mod dataset;
pub mod manifest;
mod stages;

use std::path::{Path, PathBuf};

use a2z_core::annot::AnnotError;
use a2z_core::brep::BrepError;
use a2z_core::eval::EvalError;
use a2z_core::mesh::{MeshError, PlyFormat};
use a2z_core::scan::ScanError;
use a2z_core::sketch::SketchError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{resolve_seed, ChunkRange, PipelineConfig, SEED_ENV};
pub use dataset::{discover, write_fixture_dataset, ModelJob};
pub use manifest::{ModelManifest, MANIFEST_FILE};
pub use stages::{chunk_table, run, run_with_config, EvalRecord, ModelError, RunSummary, ERRORS_FILE};

/// Per-model stages in execution order.
pub const STAGES: [&str; 5] = ["validate", "synth-scan", "annotate", "sketch", "eval"];

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    SynthScan,
    Annotate,
    Sketch,
    Eval,
    Stats,
    All,
}

impl Command {
    /// Per-model stages this command runs.
    pub fn stages(self) -> &'static [&'static str] {
        match self {
            Command::Validate => &STAGES[0..1],
            Command::SynthScan => &STAGES[1..2],
            Command::Annotate => &STAGES[2..3],
            Command::Sketch => &STAGES[3..4],
            Command::Eval => &STAGES[4..5],
            Command::Stats => &[],
            Command::All => &STAGES,
        }
    }

    pub fn writes_stats(self) -> bool {
        matches!(self, Command::Stats | Command::All)
    }
}

/// Command-line overrides on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub chunks: Option<ChunkRange>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<PlyFormat>,
    /// Lowest-priority seed source; normally the `A2Z_SEED` variable.
    pub env_seed: Option<String>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("brep: {0}")]
    Brep(#[from] BrepError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("scan: {0}")]
    Scan(#[from] ScanError),
    #[error("annotation: {0}")]
    Annot(#[from] AnnotError),
    #[error("sketch: {0}")]
    Sketch(#[from] SketchError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("labels: {0}")]
    Labels(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("missing stage output {0}; run the earlier stage first")]
    MissingStage(String),
    #[error("artifact hash mismatch: {0}")]
    Corrupt(String),
    #[error("no models found under {0}")]
    NoModels(PathBuf),
}

impl PipelineError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Io(_) => "io",
            PipelineError::Brep(_) => "brep",
            PipelineError::Mesh(_) => "mesh",
            PipelineError::Scan(_) => "scan",
            PipelineError::Annot(_) => "annotation",
            PipelineError::Sketch(_) => "sketch",
            PipelineError::Eval(_) => "eval",
            PipelineError::Labels(_) => "labels",
            PipelineError::Manifest(_) => "manifest",
            PipelineError::MissingStage(_) => "missing-stage",
            PipelineError::Corrupt(_) => "corrupt",
            PipelineError::NoModels(_) => "no-models",
        }
    }
}

pub(crate) fn rel_path(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}
