//! Pipeline configuration: one structured-text file with a section per stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use a2z_core::annot::SphConfig;
use a2z_core::eval::{PrMode, SemivariogramConfig};
use a2z_core::mesh::PlyFormat;
use a2z_core::scan::ScanConfig;
use a2z_core::sketch::{SkillParams, SketchConfig};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

pub const SEED_ENV: &str = "A2Z_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoPaths {
    /// Dataset root holding `chunk_NNNN/` directories.
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SketchSection {
    /// Skill levels rendered per model.
    pub skills: Vec<u8>,
    #[serde(flatten)]
    pub params: SketchConfig,
}

impl Default for SketchSection {
    fn default() -> Self {
        SketchSection { skills: vec![1, 2, 3, 4, 5], params: SketchConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub baseline_angle_deg: f64,
    pub pr_mode: PrMode,
    pub semivariogram: SemivariogramConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { baseline_angle_deg: 30.0, pr_mode: PrMode::Point, semivariogram: SemivariogramConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub global_seed: Option<u64>,
    /// Pool size over models; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub format: PlyFormat,
    pub io: IoPaths,
    /// Explicit layout `chunk_NNNN → model ids`; discovered from `io.input` when empty.
    #[serde(default)]
    pub chunks: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub annot: SphConfig,
    #[serde(default)]
    pub sketch: SketchSection,
    #[serde(default)]
    pub eval: EvalSection,
}

impl PipelineConfig {
    /// Parses a config file; relative io paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.io.input, &mut cfg.io.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parameter ranges and input paths; runs before any work.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.scan.validate().map_err(|e| PipelineError::Config(format!("[scan] {e}")))?;
        self.annot.validate().map_err(|e| PipelineError::Config(format!("[annot] {e}")))?;
        self.sketch.params.validate().map_err(|e| PipelineError::Config(format!("[sketch] {e}")))?;
        if self.sketch.skills.is_empty() {
            return bad("[sketch] skills must not be empty".into());
        }
        for &k in &self.sketch.skills {
            SkillParams::new(k, self.sketch.params.c_l).map_err(|e| PipelineError::Config(format!("[sketch] {e}")))?;
        }
        let e = &self.eval;
        if !(e.baseline_angle_deg > 0.0 && e.baseline_angle_deg <= 180.0) {
            return bad("[eval] baseline_angle_deg must lie in (0, 180]".into());
        }
        if let PrMode::Radius(r) = e.pr_mode {
            if !(r > 0.0) {
                return bad("[eval] pr_mode radius must be positive".into());
            }
        }
        let sv = &e.semivariogram;
        if sv.bins == 0 || sv.pair_cap < 2 || sv.centroids == 0 {
            return bad("[eval.semivariogram] needs bins >= 1, pair_cap >= 2, centroids >= 1".into());
        }
        if !self.io.input.is_dir() {
            return bad(format!("input directory {} does not exist", self.io.input.display()));
        }
        for name in self.chunks.keys() {
            chunk_number(name).ok_or_else(|| PipelineError::Config(format!("chunk name {name:?} is not chunk_NNNN")))?;
        }
        Ok(())
    }
}

/// Seed priority: command line, then config, then the environment, then 0.
pub fn resolve_seed(cli: Option<u64>, cfg: Option<u64>, env: Option<&str>) -> Result<u64, PipelineError> {
    if let Some(s) = cli.or(cfg) {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| PipelineError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        None => Ok(0),
    }
}

pub fn chunk_name(n: u32) -> String {
    format!("chunk_{n:04}")
}

pub fn chunk_number(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("chunk_")?;
    (!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok()).flatten()
}

/// Inclusive chunk ranges such as `0-30,70-99` or `5`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkRange(pub Vec<(u32, u32)>);

impl ChunkRange {
    pub fn contains(&self, n: u32) -> bool {
        self.0.iter().any(|&(a, b)| a <= n && n <= b)
    }
}

impl std::str::FromStr for ChunkRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |x: &str| x.trim().parse::<u32>().map_err(|_| format!("bad chunk number {x:?}"));
            let (a, b) = match part.split_once('-') {
                Some((a, b)) => (num(a)?, num(b)?),
                None => (num(part)?, num(part)?),
            };
            if a > b {
                return Err(format!("empty chunk range {part:?}"));
            }
            out.push((a, b));
        }
        if out.is_empty() {
            return Err("no chunk ranges given".into());
        }
        Ok(ChunkRange(out))
    }
}
