//! Soft BRep membership of scan vertices by multi-scale anisotropic SPH
//! weighting, and the boundary / junction / face records derived from it.

mod kernel;
mod label;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brep::{topo_walk, BrepSample, BrepSamples, ChainComplex, SampleSource, Step};
use crate::geom::Vec3;
use crate::mesh::ScanMesh;
use crate::par::Exec;

pub use kernel::{anisotropic_distance, normal_gate, smoothing_length, sph_kernel, SphConfig};
pub use label::{JunctionInfo, LabelKind, LabelRecord, LabelSidecar, SIDECAR_SCHEMA};

use kernel::{metric_distance, multiscale_weight};

#[derive(Debug, Error)]
pub enum AnnotError {
    #[error("no candidate samples at all")]
    EmptyNeighborhood,
    #[error("invalid SPH configuration: {0}")]
    Config(String),
    #[error("sample references a missing BRep entity")]
    DanglingSample,
}

/// A BRep entity a sample was drawn from.
pub type EntityKey = (SampleSource, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct SoftLabel {
    pub winner: EntityKey,
    /// Index of the winning sample in the candidate list.
    pub sample: usize,
    /// Summed probability of the winning entity.
    pub prob: f64,
    /// Probability per entity, in key order; sums to one.
    pub distribution: Vec<(EntityKey, f64)>,
    pub fallback: bool,
}

/// Reduces per-candidate weights to a soft label. The argmax sample wins;
/// exact weight ties go to the lower kind rank, then entity id, then index.
fn reduce(weights: &[(usize, f64)], key: impl Fn(usize) -> EntityKey) -> Option<SoftLabel> {
    let total: f64 = weights.iter().map(|w| w.1).sum();
    if total <= 0.0 {
        return None;
    }
    let (best, _) = weights.iter().fold((usize::MAX, -1.0), |(bi, bw), &(i, w)| {
        let better = w > bw || (w == bw && (key(i), i) < (key(bi), bi));
        if better {
            (i, w)
        } else {
            (bi, bw)
        }
    });
    let mut dist: BTreeMap<EntityKey, f64> = BTreeMap::new();
    for &(i, w) in weights {
        if w > 0.0 {
            *dist.entry(key(i)).or_default() += w / total;
        }
    }
    let winner = key(best);
    Some(SoftLabel { winner, sample: best, prob: dist[&winner].min(1.0), distribution: dist.into_iter().collect(), fallback: false })
}

fn candidate_weight(p: &Vec3, normal: Option<&Vec3>, x: &BrepSample, h: f64, cfg: &SphConfig) -> f64 {
    let d = metric_distance(p, x, cfg.sigmas(x.source));
    let w = multiscale_weight(d, h, cfg);
    match normal {
        Some(n) if cfg.use_gate && w > 0.0 => w * normal_gate(n, &x.normal(), cfg.lambda_gate),
        _ => w,
    }
}

/// Soft label of one point against an explicit candidate list. `epsilon` is
/// the absolute curvature floor. Falls back to the Euclidean nearest
/// candidate when every weight vanishes.
pub fn soft_label(
    p: &Vec3,
    candidates: &[&BrepSample],
    cfg: &SphConfig,
    epsilon: f64,
    normal: Option<&Vec3>,
) -> Result<SoftLabel, AnnotError> {
    if candidates.is_empty() {
        return Err(AnnotError::EmptyNeighborhood);
    }
    let weights: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, x)| (i, candidate_weight(p, normal, x, smoothing_length(x, cfg, epsilon), cfg)))
        .collect();
    let key = |i: usize| (candidates[i].source, candidates[i].source_id);
    Ok(reduce(&weights, key).unwrap_or_else(|| {
        let nn = (0..candidates.len())
            .min_by(|&a, &b| {
                let (da, db) = ((candidates[a].position - p).norm(), (candidates[b].position - p).norm());
                da.total_cmp(&db).then((key(a), a).cmp(&(key(b), b)))
            })
            .expect("non-empty");
        SoftLabel { winner: key(nn), sample: nn, prob: 1.0, distribution: vec![(key(nn), 1.0)], fallback: true }
    }))
}

type Cell = [i64; 3];

struct Grid {
    cell: f64,
    map: HashMap<Cell, Vec<u32>>,
}

impl Grid {
    fn cell_of(&self, p: &Vec3) -> Cell {
        [(p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64, (p.z / self.cell).floor() as i64]
    }
}

/// Uniform-grid index over the samples of each kind, with per-sample
/// smoothing lengths. The cell size of a kind is its largest Euclidean reach.
pub struct SampleIndex<'a> {
    pub samples: &'a BrepSamples,
    pub cfg: &'a SphConfig,
    pub epsilon: f64,
    h: Vec<f64>,
    reach: Vec<f64>,
    grids: Vec<Grid>,
}

const KINDS: [SampleSource; 3] = [SampleSource::Corner, SampleSource::Edge, SampleSource::Face];

impl<'a> SampleIndex<'a> {
    pub fn new(samples: &'a BrepSamples, cfg: &'a SphConfig, diag: f64) -> Result<Self, AnnotError> {
        cfg.validate().map_err(AnnotError::Config)?;
        let epsilon = cfg.epsilon_rel / diag.max(f64::MIN_POSITIVE);
        let gmax = cfg.gammas.iter().cloned().fold(0.0, f64::max);
        let h: Vec<f64> = samples.samples.iter().map(|s| smoothing_length(s, cfg, epsilon)).collect();
        let reach: Vec<f64> = samples
            .samples
            .iter()
            .zip(&h)
            .map(|(s, h)| cfg.max_radius.min(2.0) * gmax * h * cfg.sigmas(s.source)[0].max(cfg.sigma_n))
            .collect();
        let grids = KINDS
            .iter()
            .map(|&k| {
                let cell = samples.of_kind(k).map(|(i, _)| reach[i]).fold(0.0, f64::max);
                let mut g = Grid { cell: if cell > 0.0 { cell } else { 1.0 }, map: HashMap::new() };
                for (i, s) in samples.of_kind(k) {
                    let c = g.cell_of(&s.position);
                    g.map.entry(c).or_default().push(i as u32);
                }
                g
            })
            .collect();
        Ok(SampleIndex { samples, cfg, epsilon, h, reach, grids })
    }

    pub fn smoothing_length(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// Positive-weight candidates of one kind around `p`.
    pub fn weights(&self, kind: SampleSource, p: &Vec3, normal: Option<&Vec3>) -> Vec<(usize, f64)> {
        let g = &self.grids[kind as usize];
        let c = g.cell_of(p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(ids) = g.map.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else { continue };
                    for &i in ids {
                        let i = i as usize;
                        let x = &self.samples.samples[i];
                        if (x.position - p).norm_squared() > self.reach[i] * self.reach[i] {
                            continue;
                        }
                        let w = candidate_weight(p, normal, x, self.h[i], self.cfg);
                        if w > 0.0 {
                            out.push((i, w));
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|w| w.0);
        out
    }

    pub fn soft_label_kind(&self, kind: SampleSource, p: &Vec3, normal: Option<&Vec3>) -> Option<SoftLabel> {
        let w = self.weights(kind, p, normal);
        reduce(&w, |i| (self.samples.samples[i].source, self.samples.samples[i].source_id))
    }

    /// Exhaustive Euclidean nearest sample.
    pub fn nearest(&self, p: &Vec3) -> Option<usize> {
        let s = &self.samples.samples;
        (0..s.len()).min_by(|&a, &b| (s[a].position - p).norm_squared().total_cmp(&(s[b].position - p).norm_squared()))
    }
}

/// Per-vertex outcome of labeling before records are materialized.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexLabel {
    pub kind: LabelKind,
    pub entity: EntityKey,
    pub prob: f64,
    pub fallback: bool,
    /// Strongest edge candidate, if any edge sample has support.
    pub edge: Option<usize>,
    /// Face candidates with their summed probability.
    pub faces: Vec<(usize, f64)>,
}

/// Labels one vertex. Kind precedence is corner, then edge, then face: the
/// first kind with non-empty support decides.
pub fn label_vertex(idx: &SampleIndex, p: &Vec3, normal: Option<&Vec3>) -> Result<VertexLabel, AnnotError> {
    let corner = idx.soft_label_kind(SampleSource::Corner, p, normal);
    let edge = idx.soft_label_kind(SampleSource::Edge, p, normal);
    let face = idx.soft_label_kind(SampleSource::Face, p, normal);
    let faces: Vec<(usize, f64)> = face.as_ref().map_or_else(Vec::new, |f| f.distribution.iter().map(|(k, w)| (k.1, *w)).collect());
    let edge_id = edge.as_ref().map(|e| e.winner.1);
    let (kind, sl) = match (corner, edge, face) {
        (Some(c), _, _) => (LabelKind::Junction, c),
        (None, Some(e), _) => (LabelKind::Boundary, e),
        (None, None, Some(f)) => (LabelKind::Face, f),
        (None, None, None) => {
            let nn = idx.nearest(p).ok_or(AnnotError::EmptyNeighborhood)?;
            let s = &idx.samples.samples[nn];
            let kind = match s.source {
                SampleSource::Corner => LabelKind::Junction,
                SampleSource::Edge => LabelKind::Boundary,
                SampleSource::Face => LabelKind::Face,
            };
            let key = (s.source, s.source_id);
            return Ok(VertexLabel {
                kind,
                entity: key,
                prob: 1.0,
                fallback: true,
                edge: (s.source == SampleSource::Edge).then_some(s.source_id),
                faces: if s.source == SampleSource::Face { vec![(s.source_id, 1.0)] } else { Vec::new() },
            });
        }
    };
    Ok(VertexLabel { kind, entity: sl.winner, prob: sl.prob, fallback: false, edge: edge_id, faces })
}

fn fill_edge(c: &ChainComplex, r: &mut LabelRecord, e: usize) -> Result<(), AnnotError> {
    let walk = |path: &[Step]| topo_walk(c, e, path).map(|x| x.id()).map_err(|_| AnnotError::DanglingSample);
    r.edge_id = Some(e);
    r.loop_id = Some(walk(&[Step::Parent])?);
    r.mate_loop_id = Some(walk(&[Step::Mate, Step::Parent])?);
    r.face_id_a = Some(walk(&[Step::OwnerFace])?);
    r.face_id_b = Some(walk(&[Step::Mate, Step::OwnerFace])?);
    r.curve_class = Some(c.coedges[e].curve_class);
    Ok(())
}

/// Adjacency of a corner: its physical edges, their loops on both sides and faces.
pub fn junction_info(c: &ChainComplex, v: usize) -> JunctionInfo {
    let coedges = c.coedges_at_corner(v);
    let mut edges: Vec<usize> = coedges.iter().map(|&e| c.physical_edge_of(e)).collect();
    edges.sort_unstable();
    edges.dedup();
    let mut loops: Vec<usize> = coedges.iter().flat_map(|&e| [c.parent[e], c.parent[c.mate[e]]]).collect();
    loops.sort_unstable();
    loops.dedup();
    JunctionInfo { corner_id: v, edges, loops, faces: c.faces_of(SampleSource::Corner, v) }
}

/// Turns a vertex label into its record. `face_id` is the candidate face
/// with the smallest projection distance (ties: higher weight, then lower id).
pub fn make_record(c: &ChainComplex, p: &Vec3, vl: &VertexLabel) -> Result<LabelRecord, AnnotError> {
    let (src, id) = vl.entity;
    let n_ent = match src {
        SampleSource::Corner => c.corners.len(),
        SampleSource::Edge => c.coedges.len(),
        SampleSource::Face => c.faces.len(),
    };
    if id >= n_ent {
        return Err(AnnotError::DanglingSample);
    }
    let mut r = LabelRecord { kind: vl.kind, soft_prob: vl.prob, fallback: vl.fallback, ..Default::default() };
    match vl.kind {
        LabelKind::Junction => {
            let info = junction_info(c, id);
            if let Some(e) = vl.edge.or_else(|| info.edges.first().copied()) {
                fill_edge(c, &mut r, e)?;
            }
            r.junction = Some(info);
        }
        LabelKind::Boundary => fill_edge(c, &mut r, id)?,
        LabelKind::Face => {}
    }
    let mut cands: Vec<(usize, f64)> = vl.faces.clone();
    for f in c.faces_of(src, id) {
        if !cands.iter().any(|x| x.0 == f) {
            cands.push((f, 0.0));
        }
    }
    let best = cands
        .iter()
        .map(|&(f, w)| (c.faces[f].projection_distance(p), -w, f))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
        .map(|x| x.2);
    r.face_id = best;
    r.surface_class = best.map(|f| c.faces[f].surface_class);
    Ok(r)
}

/// Labels every vertex of `scan` against the (displaced) BRep samples.
pub fn annotate_scan(
    c: &ChainComplex,
    scan: &ScanMesh,
    samples: &BrepSamples,
    cfg: &SphConfig,
    exec: Exec,
) -> Result<ScanMesh, AnnotError> {
    if samples.is_empty() {
        return Err(AnnotError::EmptyNeighborhood);
    }
    let idx = SampleIndex::new(samples, cfg, c.diagonal())?;
    let has_normals = scan.normals.len() == scan.positions.len();
    let records: Vec<Result<LabelRecord, AnnotError>> = exec.map_range(scan.positions.len(), |i| {
        let p = &scan.positions[i];
        let n = has_normals.then(|| &scan.normals[i]);
        let vl = label_vertex(&idx, p, n)?;
        make_record(c, p, &vl)
    });
    let mut out = scan.clone();
    out.labels = Some(records.into_iter().collect::<Result<_, _>>()?);
    Ok(out)
}

/// Percentages of ground-truth entities represented by at least one record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub boundary_id: f64,
    pub boundary_type: f64,
    pub boundary_loop: f64,
    pub face_id: f64,
    pub face_type: f64,
    pub n_edges: usize,
    pub n_loops: usize,
    pub n_faces: usize,
}

fn pct(hit: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * hit as f64 / total as f64
    }
}

/// Edge coverage is counted per physical edge (either coedge of a mate pair
/// may appear in a record); loops count through `loop_id` or `mate_loop_id`.
pub fn coverage_stats(c: &ChainComplex, labeled: &ScanMesh) -> CoverageReport {
    let labels = labeled.labels.as_deref().unwrap_or(&[]);
    let edges = c.physical_edges();
    let mut edge_hit = vec![false; c.coedges.len()];
    let mut edge_type = vec![false; c.coedges.len()];
    let mut loop_hit = vec![false; c.loops.len()];
    let mut face_hit = vec![false; c.faces.len()];
    let mut face_type = vec![false; c.faces.len()];
    for r in labels {
        if let Some(e) = r.edge_id.filter(|&e| e < c.coedges.len()) {
            let pe = c.physical_edge_of(e);
            edge_hit[pe] = true;
            edge_type[pe] |= r.curve_class == Some(c.coedges[e].curve_class);
        }
        for l in [r.loop_id, r.mate_loop_id].into_iter().flatten().filter(|&l| l < c.loops.len()) {
            loop_hit[l] = true;
        }
        if let Some(f) = r.face_id.filter(|&f| f < c.faces.len()) {
            face_hit[f] = true;
            face_type[f] |= r.surface_class == Some(c.faces[f].surface_class);
        }
    }
    let count = |v: &[bool]| v.iter().filter(|x| **x).count();
    CoverageReport {
        boundary_id: pct(edges.iter().filter(|&&e| edge_hit[e]).count(), edges.len()),
        boundary_type: pct(edges.iter().filter(|&&e| edge_type[e]).count(), edges.len()),
        boundary_loop: pct(count(&loop_hit), c.loops.len()),
        face_id: pct(count(&face_hit), c.faces.len()),
        face_type: pct(count(&face_type), c.faces.len()),
        n_edges: edges.len(),
        n_loops: c.loops.len(),
        n_faces: c.faces.len(),
    }
}
