//! Scan-like mesh synthesis: subdivision, tiny-hole shrink and occlusion,
//! multi-octave roughness and localized dents, applied identically to the
//! mesh and to the BRep samples so both stay co-registered.

mod perlin;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brep::{sample_brep, BrepError, BrepSamples, ChainComplex, SampleSource, SamplingConfig, Surface};
use crate::geom::{polyline_distance, Mat3, Vec3};
use crate::mesh::{upsample_mesh, MeshError, ScanMesh};
use crate::par::Exec;
use crate::rng::{self, StageRng};

pub use perlin::Perlin;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Brep(#[from] BrepError),
    #[error("dent seed on face {0} is not on a planar face")]
    SeedPlacement(usize),
    #[error("invalid scan configuration: {0}")]
    Config(String),
}

pub const OCCLUSION_BUDGET: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShrinkParams {
    /// Tiny-hole perimeter ratio threshold.
    pub tau_h: f64,
    pub eta: f64,
    /// Gaussian width as a multiple of the loop perimeter.
    pub influence_radius: f64,
    /// Fixed at 0.2.
    pub occlusion_budget: f64,
    pub remove_triangles: bool,
}

impl Default for ShrinkParams {
    fn default() -> Self {
        ShrinkParams { tau_h: 0.08, eta: 0.15, influence_radius: 0.5, occlusion_budget: OCCLUSION_BUDGET, remove_triangles: true }
    }
}

impl ShrinkParams {
    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.tau_h > 0.0 && self.tau_h < 1.0) {
            return Err(ScanError::Config("tau_h must lie in (0, 1)".into()));
        }
        if self.eta < 0.0 || self.influence_radius <= 0.0 {
            return Err(ScanError::Config("eta must be >= 0 and influence_radius > 0".into()));
        }
        if self.occlusion_budget != OCCLUSION_BUDGET {
            return Err(ScanError::Config("occlusion_budget is fixed at 0.2".into()));
        }
        Ok(())
    }
}

/// Roughness settings relative to the bounding-box diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoughnessConfig {
    pub amplitude_rel: f64,
    pub octaves: usize,
    /// Geometric decay of the octave weights before normalization.
    pub weight_ratio: f64,
    /// First-octave frequency times the diagonal.
    pub base_frequency_rel: f64,
}

impl Default for RoughnessConfig {
    fn default() -> Self {
        RoughnessConfig { amplitude_rel: 0.002, octaves: 4, weight_ratio: 0.5, base_frequency_rel: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughnessParams {
    pub amplitude: f64,
    pub weights: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub perlin_seed: u64,
}

impl RoughnessParams {
    pub fn from_config(cfg: &RoughnessConfig, diag: f64, perlin_seed: u64) -> Self {
        let raw: Vec<f64> = (0..cfg.octaves).map(|o| cfg.weight_ratio.powi(o as i32)).collect();
        let total: f64 = raw.iter().sum();
        RoughnessParams {
            amplitude: cfg.amplitude_rel * diag,
            weights: raw.iter().map(|w| w / total).collect(),
            frequencies: (0..cfg.octaves).map(|o| cfg.base_frequency_rel / diag * 2f64.powi(o as i32)).collect(),
            perlin_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.weights.len() != self.frequencies.len() || self.weights.is_empty() {
            return Err(ScanError::Config("octave weights and frequencies must match and be non-empty".into()));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 || self.weights.iter().any(|w| *w < 0.0) {
            return Err(ScanError::Config("octave weights must be non-negative and sum to 1".into()));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScanError::Config("octave frequencies must be strictly increasing".into()));
        }
        if self.amplitude < 0.0 {
            return Err(ScanError::Config("roughness amplitude must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DentConfig {
    pub enabled: bool,
    /// Fraction of planar faces receiving dents (at least one).
    pub face_fraction: f64,
    pub seeds_min: usize,
    pub seeds_max: usize,
    pub depth_rel: [f64; 2],
    pub radius_rel: [f64; 2],
    /// Bump amplitude upper bound as a fraction of the dent depth.
    pub bump_frac: f64,
}

impl Default for DentConfig {
    fn default() -> Self {
        DentConfig {
            enabled: true,
            face_fraction: 0.3,
            seeds_min: 1,
            seeds_max: 5,
            depth_rel: [0.001, 0.004],
            radius_rel: [0.02, 0.08],
            bump_frac: 0.5,
        }
    }
}

/// One dent-and-bump term on a planar host face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dent {
    pub face: usize,
    pub seed: Vec3,
    pub depth: f64,
    pub radius: f64,
    pub bump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub iterations: u32,
    pub sampling: SamplingConfig,
    pub shrink: ShrinkParams,
    pub roughness: RoughnessConfig,
    pub dents: DentConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            iterations: 2,
            sampling: SamplingConfig::default(),
            shrink: ShrinkParams::default(),
            roughness: RoughnessConfig::default(),
            dents: DentConfig::default(),
        }
    }
}

impl ScanConfig {
    /// Every artifact amplitude zero: the output is the pure subdivision.
    pub fn zero_artifacts() -> Self {
        let mut c = ScanConfig::default();
        c.shrink.eta = 0.0;
        c.shrink.remove_triangles = false;
        c.roughness.amplitude_rel = 0.0;
        c.dents.enabled = false;
        c
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        self.shrink.validate()?;
        let d = &self.dents;
        let ok = d.face_fraction >= 0.0
            && d.face_fraction <= 1.0
            && d.seeds_min >= 1
            && d.seeds_min <= d.seeds_max
            && d.depth_rel[0] >= 0.0
            && d.depth_rel[0] <= d.depth_rel[1]
            && d.radius_rel[0] > 0.0
            && d.radius_rel[0] <= d.radius_rel[1]
            && d.bump_frac >= 0.0;
        if !ok {
            return Err(ScanError::Config("dent ranges are inconsistent".into()));
        }
        let r = &self.roughness;
        if r.octaves == 0 || r.weight_ratio <= 0.0 || r.base_frequency_rel <= 0.0 || r.amplitude_rel < 0.0 {
            return Err(ScanError::Config("roughness settings out of range".into()));
        }
        if self.sampling.face_pitch_rel <= 0.0 || self.sampling.edge_spacing_frac <= 0.0 {
            return Err(ScanError::Config("sampling pitches must be positive".into()));
        }
        Ok(())
    }
}

/// Loops whose perimeter ratio to the longest loop is below `τ_h`; empty
/// unless the complex has more than two loops.
pub fn detect_tiny_holes(c: &ChainComplex, p: &ShrinkParams) -> Vec<usize> {
    if c.loops.len() <= 2 {
        return Vec::new();
    }
    let lmax = c.loops.iter().map(|l| l.perimeter).fold(0.0, f64::max);
    c.loops.iter().filter(|l| l.perimeter / lmax < p.tau_h).map(|l| l.id).collect()
}

/// Tangential pull toward the loop centroid, `−η·w·P(x − c)` with
/// `w = exp(−d² / 2(ρ·L)²)`; zero where `w < 1e-4`.
pub fn shrink_displacement(x: &Vec3, centroid: &Vec3, normal: &Vec3, polyline: &[Vec3], perimeter: f64, p: &ShrinkParams) -> Vec3 {
    let width = p.influence_radius * perimeter;
    let d = polyline_distance(x, polyline);
    let w = (-d * d / (2.0 * width * width)).exp();
    if w < 1e-4 {
        return Vec3::zeros();
    }
    let v = x - centroid;
    let tangential = v - normal * normal.dot(&v);
    -tangential * (p.eta * w)
}

/// Shrink field of loop `l` over a point set.
pub fn shrink_near_loop(c: &ChainComplex, l: usize, points: &[Vec3], p: &ShrinkParams, exec: Exec) -> Vec<Vec3> {
    let lp = &c.loops[l];
    let poly = c.loop_polyline(l);
    exec.map(points, |x| shrink_displacement(x, &lp.centroid, &lp.normal, &poly, lp.perimeter, p))
}

/// Face across the loop: the most frequent owner of the mated coedges
/// (ties to the smaller id). `None` when every coedge is self-mated.
pub fn mate_face(c: &ChainComplex, l: usize) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &e in &c.loops[l].coedge_ids {
        if !c.is_self_mated(e) {
            *counts.entry(c.owner_face(c.mate[e])).or_default() += 1;
        }
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|x| x.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub loop_id: usize,
    pub mate_face: Option<usize>,
    pub removed: Vec<u32>,
    pub removed_area: f64,
    /// Reference area: the smaller of the BRep face area and its mesh area.
    pub mate_area: f64,
    pub target_area: f64,
}

#[derive(PartialEq)]
struct Queued(f64, u32);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Selects a connected patch of mate-face triangles to drop: seeded at the
/// triangle nearest the hole axis, grown by distance from the seed, stopping
/// before the target area (a random fraction in `[0.5, 1]` of the budget) is
/// exceeded. Requires `m.triangle_faces`. The mesh itself is not modified.
pub fn select_occluded_triangles(
    m: &ScanMesh,
    neighbors: &[Vec<u32>],
    c: &ChainComplex,
    l: usize,
    p: &ShrinkParams,
    rng: &mut StageRng,
) -> RemovalReport {
    let fraction = rng.random_range(0.5..=1.0);
    let mut rep = RemovalReport { loop_id: l, ..Default::default() };
    let (Some(fm), Some(tf)) = (mate_face(c, l), m.triangle_faces.as_ref()) else { return rep };
    rep.mate_face = Some(fm);
    let tris: Vec<u32> = (0..m.n_triangles() as u32).filter(|&t| tf[t as usize] == fm as u32).collect();
    if tris.is_empty() {
        return rep;
    }
    let mesh_area: f64 = tris.iter().map(|&t| m.triangle_area(t as usize)).sum();
    rep.mate_area = mesh_area.min(c.faces[fm].area);
    rep.target_area = p.occlusion_budget * rep.mate_area * fraction;

    let lp = &c.loops[l];
    let axis_dist = |t: u32| {
        let v = m.centroid(t as usize) - lp.centroid;
        (v - lp.normal * lp.normal.dot(&v)).norm()
    };
    let seed = tris.iter().copied().min_by(|&a, &b| axis_dist(a).total_cmp(&axis_dist(b)).then(a.cmp(&b))).expect("non-empty");
    let origin = m.centroid(seed as usize);
    let mut visited = std::collections::HashSet::new();
    let mut heap = BinaryHeap::new();
    heap.push(Queued(0.0, seed));
    visited.insert(seed);
    while let Some(Queued(_, t)) = heap.pop() {
        let a = m.triangle_area(t as usize);
        if rep.removed_area + a > rep.target_area {
            break;
        }
        rep.removed_area += a;
        rep.removed.push(t);
        for &nb in &neighbors[t as usize] {
            if tf[nb as usize] == fm as u32 && visited.insert(nb) {
                heap.push(Queued((m.centroid(nb as usize) - origin).norm(), nb));
            }
        }
    }
    rep
}

/// Removes the occluded patch for loop `l` and returns the new mesh.
pub fn remove_occluded_triangles(
    m: &ScanMesh,
    c: &ChainComplex,
    l: usize,
    p: &ShrinkParams,
    rng: &mut StageRng,
) -> (ScanMesh, RemovalReport) {
    let rep = select_occluded_triangles(m, &m.triangle_neighbors(), c, l, p, rng);
    let mut out = m.clone();
    if !rep.removed.is_empty() {
        let mut mask = vec![false; m.n_triangles()];
        for &t in &rep.removed {
            mask[t as usize] = true;
        }
        out.remove_triangles(&mask);
        out.compute_normals();
    }
    (out, rep)
}

/// `A_r Σ_o λ_o N(ω_o x) n`.
pub fn roughness_displacement(x: &Vec3, n: &Vec3, r: &RoughnessParams, noise: &Perlin) -> Vec3 {
    if r.amplitude == 0.0 {
        return Vec3::zeros();
    }
    let s: f64 = r.weights.iter().zip(&r.frequencies).map(|(l, w)| l * noise.noise(&(x * *w))).sum();
    n * (r.amplitude * s)
}

pub fn apply_roughness(points: &[Vec3], normals: &[Vec3], r: &RoughnessParams, exec: Exec) -> Vec<Vec3> {
    let noise = Perlin::new(r.perlin_seed);
    exec.map_range(points.len(), |i| roughness_displacement(&points[i], &normals[i], r, &noise))
}

/// One dent term at `x`: `(−δ e^{−r²/2ρ²} + ε sin(πr/ρ)) n`, with the sine
/// zeroed beyond `ρ` and `r` the in-plane distance to the seed.
pub fn dent_displacement(x: &Vec3, n: &Vec3, plane_normal: &Vec3, d: &Dent) -> Vec3 {
    let v = x - d.seed;
    let r = (v - plane_normal * plane_normal.dot(&v)).norm();
    let gauss = -d.depth * (-r * r / (2.0 * d.radius * d.radius)).exp();
    let bump = if r <= d.radius { d.bump * (std::f64::consts::PI * r / d.radius).sin() } else { 0.0 };
    n * (gauss + bump)
}

/// Dent field over points; `on_face(i, f)` says whether point `i` belongs to face `f`.
pub fn apply_dents_bumps(
    c: &ChainComplex,
    points: &[Vec3],
    normals: &[Vec3],
    on_face: impl Fn(usize, usize) -> bool + Sync + Send,
    dents: &[Dent],
    exec: Exec,
) -> Result<Vec<Vec3>, ScanError> {
    let mut planes = Vec::with_capacity(dents.len());
    for d in dents {
        let Surface::Plane(at) = &c.faces.get(d.face).ok_or(ScanError::SeedPlacement(d.face))?.surface else {
            return Err(ScanError::SeedPlacement(d.face));
        };
        if (d.seed - at.origin).dot(&at.axis).abs() > c.tol_geo.max(1e-12) {
            return Err(ScanError::SeedPlacement(d.face));
        }
        planes.push(at.axis);
    }
    Ok(exec.map_range(points.len(), |i| {
        let mut acc = Vec3::zeros();
        for (d, pn) in dents.iter().zip(&planes) {
            if on_face(i, d.face) {
                acc += dent_displacement(&points[i], &normals[i], pn, d);
            }
        }
        acc
    }))
}

/// Draws dent terms on a random subset of planar faces, seeded on face samples.
pub fn draw_dents(c: &ChainComplex, samples: &BrepSamples, cfg: &DentConfig, rng: &mut StageRng) -> Vec<Dent> {
    if !cfg.enabled {
        return Vec::new();
    }
    let diag = c.diagonal();
    let planar: Vec<usize> = c.faces.iter().filter(|f| matches!(f.surface, Surface::Plane(_))).map(|f| f.id).collect();
    if planar.is_empty() {
        return Vec::new();
    }
    let n_sel = ((cfg.face_fraction * planar.len() as f64).round() as usize).clamp(1, planar.len());
    let chosen: Vec<usize> = {
        let mut idx = rand::seq::index::sample(rng, planar.len(), n_sel).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| planar[i]).collect()
    };
    let mut out = Vec::new();
    for f in chosen {
        let pts: Vec<Vec3> = samples.of_kind(SampleSource::Face).filter(|(_, s)| s.source_id == f).map(|(_, s)| s.position).collect();
        if pts.is_empty() {
            continue;
        }
        let k = rng.random_range(cfg.seeds_min..=cfg.seeds_max);
        for _ in 0..k {
            let seed = pts[rng.random_range(0..pts.len())];
            let depth = rng.random_range(cfg.depth_rel[0]..=cfg.depth_rel[1]) * diag;
            let radius = rng.random_range(cfg.radius_rel[0]..=cfg.radius_rel[1]) * diag;
            let bump = rng.random_range(0.0..=1.0) * cfg.bump_frac * depth;
            out.push(Dent { face: f, seed, depth, radius, bump });
        }
    }
    out
}

/// Owning face per triangle by the smallest projection distance of its centroid.
pub fn assign_triangle_faces(c: &ChainComplex, m: &ScanMesh, exec: Exec) -> Vec<u32> {
    exec.map_range(m.n_triangles(), |t| {
        let x = m.centroid(t);
        (0..c.faces.len())
            .map(|f| (c.faces[f].projection_distance(&x), f))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map_or(0, |x| x.1 as u32)
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub tiny_holes: Vec<usize>,
    pub removals: Vec<RemovalReport>,
    pub roughness: Option<RoughnessParams>,
    pub dents: Vec<Dent>,
    pub input_triangles: usize,
    pub subdivided_triangles: usize,
    pub output_vertices: usize,
    pub output_triangles: usize,
}

#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub mesh: ScanMesh,
    pub samples: BrepSamples,
    /// Samples before displacement, index-aligned with `samples`.
    pub rest_samples: BrepSamples,
    pub report: ScanReport,
}

/// Steps I→II→III→IV. All fields are evaluated at the rest position and
/// summed; the same composition displaces the BRep samples.
pub fn synthesize_scan(c: &ChainComplex, low: &ScanMesh, cfg: &ScanConfig, seed: u64, exec: Exec) -> Result<ScanOutput, ScanError> {
    cfg.validate()?;
    low.validate()?;
    let mut base = low.clone();
    if base.triangle_faces.as_ref().is_none_or(|tf| tf.len() != base.n_triangles() || tf.iter().any(|&f| f as usize >= c.faces.len())) {
        base.triangle_faces = Some(assign_triangle_faces(c, &base, exec));
    }
    let mut report = ScanReport { input_triangles: base.n_triangles(), ..Default::default() };

    // Step I
    let mut mesh = upsample_mesh(&base, cfg.iterations)?;
    report.subdivided_triangles = mesh.n_triangles();
    let rest_samples = sample_brep(c, &cfg.sampling)?;
    let spts = rest_samples.positions();

    // Step II
    let holes = detect_tiny_holes(c, &cfg.shrink);
    let mut mesh_disp = vec![Vec3::zeros(); mesh.n_vertices()];
    let mut sample_disp = vec![Vec3::zeros(); spts.len()];
    if cfg.shrink.eta > 0.0 {
        for &l in &holes {
            for (acc, d) in mesh_disp.iter_mut().zip(shrink_near_loop(c, l, &mesh.positions, &cfg.shrink, exec)) {
                *acc += d;
            }
            for (acc, d) in sample_disp.iter_mut().zip(shrink_near_loop(c, l, &spts, &cfg.shrink, exec)) {
                *acc += d;
            }
        }
    }
    if cfg.shrink.remove_triangles && !holes.is_empty() {
        let mut rrng = rng::tagged(seed, "occlusion");
        let neighbors = mesh.triangle_neighbors();
        let mut mask = vec![false; mesh.n_triangles()];
        for &l in &holes {
            let rep = select_occluded_triangles(&mesh, &neighbors, c, l, &cfg.shrink, &mut rrng);
            for &t in &rep.removed {
                mask[t as usize] = true;
            }
            report.removals.push(rep);
        }
        if mask.iter().any(|m| *m) {
            let map = mesh.remove_triangles(&mask);
            let mut kept = vec![Vec3::zeros(); mesh.n_vertices()];
            for (old, new) in map.iter().enumerate() {
                if let Some(n) = new {
                    kept[*n as usize] = mesh_disp[old];
                }
            }
            mesh_disp = kept;
        }
    }
    report.tiny_holes = holes;
    mesh.compute_normals();
    let snormals: Vec<Vec3> = rest_samples.samples.iter().map(|s| s.normal()).collect();

    // Step III
    if cfg.roughness.amplitude_rel > 0.0 {
        let perlin_seed = rng::tagged(seed, "roughness").random::<u64>();
        let r = RoughnessParams::from_config(&cfg.roughness, c.diagonal(), perlin_seed);
        r.validate()?;
        for (acc, d) in mesh_disp.iter_mut().zip(apply_roughness(&mesh.positions, &mesh.normals, &r, exec)) {
            *acc += d;
        }
        for (acc, d) in sample_disp.iter_mut().zip(apply_roughness(&spts, &snormals, &r, exec)) {
            *acc += d;
        }
        report.roughness = Some(r);
    }

    // Step IV
    let dents = draw_dents(c, &rest_samples, &cfg.dents, &mut rng::tagged(seed, "dents"));
    if !dents.is_empty() {
        let tf = mesh.triangle_faces.clone().expect("assigned above");
        let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); mesh.n_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &v in tri {
                if !vertex_faces[v as usize].contains(&tf[t]) {
                    vertex_faces[v as usize].push(tf[t]);
                }
            }
        }
        let d = apply_dents_bumps(c, &mesh.positions, &mesh.normals, |i, f| vertex_faces[i].contains(&(f as u32)), &dents, exec)?;
        for (acc, x) in mesh_disp.iter_mut().zip(d) {
            *acc += x;
        }
        let sample_faces: Vec<Vec<usize>> = rest_samples.samples.iter().map(|s| c.faces_of(s.source, s.source_id)).collect();
        let d = apply_dents_bumps(c, &spts, &snormals, |i, f| sample_faces[i].contains(&f), &dents, exec)?;
        for (acc, x) in sample_disp.iter_mut().zip(d) {
            *acc += x;
        }
    }
    report.dents = dents;

    for (p, d) in mesh.positions.iter_mut().zip(&mesh_disp) {
        *p += d;
    }
    mesh.compute_normals();
    let mut samples = rest_samples.clone();
    for (s, d) in samples.samples.iter_mut().zip(&sample_disp) {
        s.position += d;
    }
    report.output_vertices = mesh.n_vertices();
    report.output_triangles = mesh.n_triangles();
    Ok(ScanOutput { mesh, samples, rest_samples, report })
}

/// In-plane projector `I − n nᵀ`.
pub fn in_plane_projector(n: &Vec3) -> Mat3 {
    Mat3::identity() - n * n.transpose()
}
