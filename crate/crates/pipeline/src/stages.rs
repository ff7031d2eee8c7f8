//! Per-model stage bodies and the batch driver.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use a2z_core::annot::{annotate_scan, LabelSidecar};
use a2z_core::brep::{parse_brep, ChainComplex};
use a2z_core::eval::{
    coverage_stats, dataset_analytics, dihedral_baseline, pr_metrics_with, residual_field, semivariogram, CoverageReport, DetectionResult, Pr, PrReport,
    PrTable, SemivariogramReport,
};
use a2z_core::mesh::{read_mesh, read_ply, read_samples_ply, write_ply, write_points_ply, write_samples_ply, PlyFormat, ScanMesh};
use a2z_core::par::Exec;
use a2z_core::rng;
use a2z_core::scan::synthesize_scan;
use a2z_core::sketch::{synthesize_sketch, SketchFile};
use serde::{Deserialize, Serialize};

use crate::config::{resolve_seed, PipelineConfig};
use crate::dataset::{discover, ModelJob};
use crate::manifest::{atomic_write, atomic_write_with, sha256_file, ModelManifest};
use crate::{rel_path, Command, PipelineError, RunOptions, EXIT_OK, EXIT_PARTIAL};

pub const ERRORS_FILE: &str = "errors.json";

/// One failed model in `errors.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelError {
    pub chunk: String,
    pub model_id: String,
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub models: usize,
    pub failures: Vec<ModelError>,
    pub pr_table: Option<PrTable>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }

    pub fn completed(&self) -> usize {
        self.models - self.failures.len()
    }
}

/// Per-model evaluation written to `eval.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub chunk: String,
    pub model_id: String,
    pub baseline_angle_deg: f64,
    pub pr: PrReport,
    pub coverage: CoverageReport,
    pub semivariogram: SemivariogramReport,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    job: &'a ModelJob,
    dir: PathBuf,
    seed: u64,
    format: PlyFormat,
    exec: Exec,
}

impl Ctx<'_> {
    fn save_json<T: Serialize>(&self, man: &mut ModelManifest, stage: &str, name: &str, rel: &str, v: &T) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(v).expect("stage output serializes");
        atomic_write(&self.dir.join(rel), text.as_bytes())?;
        man.record(&self.dir, stage, name, rel)
    }

    fn save_mesh(&self, man: &mut ModelManifest, stage: &str, name: &str, rel: &str, m: &ScanMesh) -> Result<(), PipelineError> {
        atomic_write_with(&self.dir.join(rel), |p| write_ply(p, m, self.format))?;
        man.record(&self.dir, stage, name, rel)
    }

    /// Inputs after checking they still hash to what `validate` saw.
    fn brep(&self, man: &ModelManifest) -> Result<ChainComplex, PipelineError> {
        self.check_input(man, "brep", &self.job.brep)?;
        Ok(parse_brep(&self.job.brep)?)
    }

    fn check_input(&self, man: &ModelManifest, key: &str, path: &Path) -> Result<(), PipelineError> {
        let want = man.input_sha256.get(key).ok_or_else(|| PipelineError::MissingStage("validate".into()))?;
        let got = sha256_file(path)?;
        if &got != want {
            return Err(PipelineError::Corrupt(format!("input {} changed since validate", path.display())));
        }
        Ok(())
    }

    fn validate(&self) -> Result<ModelManifest, PipelineError> {
        let root = &self.cfg.io.input;
        let mut man = ModelManifest::new(&self.job.model_id, &self.job.chunk, rel_path(root, &self.job.brep), rel_path(root, &self.job.mesh), self.seed);
        parse_brep(&self.job.brep)?;
        let mesh = read_mesh(&self.job.mesh)?;
        if mesh.n_triangles() == 0 {
            return Err(PipelineError::Mesh(a2z_core::mesh::MeshError::Format("mesh has no triangles".into())));
        }
        man.input_sha256.insert("brep".into(), sha256_file(&self.job.brep)?);
        man.input_sha256.insert("mesh".into(), sha256_file(&self.job.mesh)?);
        man.stages.insert("validate".into(), Default::default());
        man.status = "validated".into();
        Ok(man)
    }

    fn synth_scan(&self, man: &mut ModelManifest) -> Result<(), PipelineError> {
        let c = self.brep(man)?;
        self.check_input(man, "mesh", &self.job.mesh)?;
        let low = read_mesh(&self.job.mesh)?;
        let out = synthesize_scan(&c, &low, &self.cfg.scan, self.seed, self.exec)?;
        const S: &str = "synth-scan";
        self.save_mesh(man, S, "mesh", "scan.ply", &out.mesh)?;
        atomic_write_with(&self.dir.join("samples.ply"), |p| write_samples_ply(p, &out.samples, self.format))?;
        man.record(&self.dir, S, "samples", "samples.ply")?;
        self.save_json(man, S, "report", "scan_report.json", &out.report)?;
        man.status = "scanned".into();
        Ok(())
    }

    fn annotate(&self, man: &mut ModelManifest) -> Result<(), PipelineError> {
        let c = self.brep(man)?;
        let scan = read_ply(man.verified(&self.dir, "synth-scan", "mesh")?)?;
        let samples = read_samples_ply(man.verified(&self.dir, "synth-scan", "samples")?)?;
        let labeled = annotate_scan(&c, &scan, &samples, &self.cfg.annot, self.exec)?;
        const S: &str = "annotate";
        self.save_mesh(man, S, "labels", "labels.ply", &labeled)?;
        let sidecar = LabelSidecar::from_labels(labeled.labels.as_deref().unwrap_or(&[]));
        self.save_json(man, S, "sidecar", "labels.json", &sidecar)?;
        man.status = "annotated".into();
        Ok(())
    }

    fn sketch(&self, man: &mut ModelManifest) -> Result<(), PipelineError> {
        let c = self.brep(man)?;
        // one seed for every skill level, so levels differ only by amplitude
        let seed = rng::mix(self.seed, rng::hash_str("sketch"));
        const S: &str = "sketch";
        for &k in &self.cfg.sketch.skills {
            let strokes = synthesize_sketch(&c, k, &self.cfg.sketch.params, seed, self.exec)?;
            let file = SketchFile::new(k, seed, strokes);
            let json = format!("sketch_k{k}.json");
            atomic_write(&self.dir.join(&json), file.to_json().as_bytes())?;
            man.record(&self.dir, S, &format!("strokes_k{k}"), &json)?;
            let ply = format!("sketch_k{k}_points.ply");
            atomic_write_with(&self.dir.join(&ply), |p| write_points_ply(p, &file.point_cloud(), self.format))?;
            man.record(&self.dir, S, &format!("points_k{k}"), &ply)?;
        }
        man.status = "sketched".into();
        Ok(())
    }

    fn eval(&self, man: &mut ModelManifest) -> Result<EvalRecord, PipelineError> {
        let c = self.brep(man)?;
        let mut labeled = read_ply(man.verified(&self.dir, "annotate", "labels")?)?;
        let sidecar: LabelSidecar = serde_json::from_slice(&fs::read(man.verified(&self.dir, "annotate", "sidecar")?)?)
            .map_err(|e| PipelineError::Labels(e.to_string()))?;
        let labels = labeled.labels.as_mut().ok_or_else(|| PipelineError::Labels("labels.ply carries no label properties".into()))?;
        sidecar.apply(labels).map_err(PipelineError::Labels)?;

        let e = &self.cfg.eval;
        let gt = DetectionResult::from_labels(&labeled)?;
        let pred = dihedral_baseline(&labeled, e.baseline_angle_deg);
        let pr = pr_metrics_with(&gt, &pred, &labeled.positions, e.pr_mode)?;
        let coverage = coverage_stats(&c, &labeled);
        let field = residual_field(&c, &labeled)?;
        let sv = semivariogram(&labeled.positions, &field, &e.semivariogram, rng::mix(self.seed, rng::hash_str("semivariogram")), self.exec)?;
        let rec = EvalRecord {
            chunk: self.job.chunk.clone(),
            model_id: self.job.model_id.clone(),
            baseline_angle_deg: e.baseline_angle_deg,
            pr,
            coverage,
            semivariogram: sv,
        };
        self.save_json(man, "eval", "report", "eval.json", &rec)?;
        man.status = "evaluated".into();
        Ok(rec)
    }
}

fn process(cfg: &PipelineConfig, job: &ModelJob, seed: u64, cmd: Command) -> Result<Option<EvalRecord>, ModelError> {
    let ctx = Ctx {
        cfg,
        job,
        dir: cfg.io.output.join(&job.chunk).join(&job.model_id),
        seed: rng::model_seed(seed, &job.model_id),
        format: cfg.format,
        exec: Exec::default(),
    };
    let mut man: Option<ModelManifest> = None;
    let mut eval = None;
    for &stage in cmd.stages() {
        let mut step = || -> Result<(), PipelineError> {
            let mut m = match (stage, man.take()) {
                ("validate", _) => ctx.validate()?,
                (_, Some(m)) => m,
                (_, None) => ModelManifest::load(&ctx.dir)?,
            };
            if stage != "validate" {
                m.reset_from(stage);
                m.seed = ctx.seed;
            }
            match stage {
                "validate" => {}
                "synth-scan" => ctx.synth_scan(&mut m)?,
                "annotate" => ctx.annotate(&mut m)?,
                "sketch" => ctx.sketch(&mut m)?,
                _ => eval = Some(ctx.eval(&mut m)?),
            }
            m.save(&ctx.dir)?;
            man = Some(m);
            Ok(())
        };
        step().map_err(|e| ModelError {
            chunk: job.chunk.clone(),
            model_id: job.model_id.clone(),
            stage: stage.into(),
            kind: e.kind().into(),
            message: e.to_string(),
        })?;
    }
    Ok(eval)
}

/// Chunk rows pool the confusion counts of their models.
pub fn chunk_table(records: &[EvalRecord]) -> PrTable {
    let mut pooled: BTreeMap<&str, [[usize; 3]; 2]> = BTreeMap::new();
    for r in records {
        let acc = pooled.entry(&r.chunk).or_default();
        for (a, p) in acc.iter_mut().zip([&r.pr.boundary, &r.pr.junction]) {
            *a = [a[0] + p.tp, a[1] + p.fp, a[2] + p.fn_];
        }
    }
    let mut t = PrTable::default();
    for (chunk, [b, j]) in pooled {
        t.push(chunk, PrReport { boundary: Pr::from_counts(b[0], b[1], b[2]), junction: Pr::from_counts(j[0], j[1], j[2]) });
    }
    t
}

/// Loads the config file and runs `cmd`. `Err` means a fatal error.
pub fn run(cmd: Command, config: &Path, opts: &RunOptions) -> Result<RunSummary, PipelineError> {
    run_with_config(cmd, PipelineConfig::load(config)?, opts)
}

pub fn run_with_config(cmd: Command, mut cfg: PipelineConfig, opts: &RunOptions) -> Result<RunSummary, PipelineError> {
    if let Some(o) = &opts.out {
        cfg.io.output = o.clone();
    }
    if let Some(f) = opts.format {
        cfg.format = f;
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let seed = resolve_seed(opts.seed, cfg.global_seed, opts.env_seed.as_deref())?;
    let jobs = discover(&cfg, opts.chunks.as_ref())?;
    let out = cfg.io.output.clone();
    fs::create_dir_all(&out)?;

    let exec = Exec::default();
    let outcomes = exec.install(cfg.workers, || exec.map(&jobs, |j| process(&cfg, j, seed, cmd)));
    let mut failures: Vec<ModelError> = Vec::new();
    let mut evals = Vec::new();
    let mut ok_jobs = Vec::new();
    for (job, o) in jobs.iter().zip(outcomes) {
        match o {
            Ok(e) => {
                evals.extend(e);
                ok_jobs.push(job);
            }
            Err(e) => failures.push(e),
        }
    }

    let mut pr_table = None;
    if cmd.stages().contains(&"eval") {
        let t = chunk_table(&evals);
        atomic_write(&out.join("pr_table.csv"), t.to_csv().as_bytes())?;
        atomic_write(&out.join("pr_table.txt"), t.to_text().as_bytes())?;
        atomic_write(&out.join("eval_summary.json"), serde_json::to_string_pretty(&evals).expect("serializes").as_bytes())?;
        pr_table = Some(t);
    }
    if cmd.writes_stats() {
        let parsed = exec.install(cfg.workers, || exec.map(&ok_jobs, |j| parse_brep(&j.brep)));
        let mut batch = Vec::new();
        for (job, p) in ok_jobs.iter().zip(&parsed) {
            match p {
                Ok(c) => batch.push((job.model_id.as_str(), c)),
                Err(e) => failures.push(ModelError {
                    chunk: job.chunk.clone(),
                    model_id: job.model_id.clone(),
                    stage: "stats".into(),
                    kind: "brep".into(),
                    message: e.to_string(),
                }),
            }
        }
        if !batch.is_empty() {
            let rep = dataset_analytics(&batch, exec)?;
            atomic_write(&out.join("stats.json"), rep.to_json().as_bytes())?;
            atomic_write(&out.join("stats.csv"), rep.to_csv().as_bytes())?;
        }
    }
    failures.sort_by(|a, b| (&a.chunk, &a.model_id).cmp(&(&b.chunk, &b.model_id)));
    atomic_write(&out.join(ERRORS_FILE), serde_json::to_string_pretty(&failures).expect("serializes").as_bytes())?;
    Ok(RunSummary { command: cmd, seed, out, models: jobs.len(), failures, pr_table })
}
