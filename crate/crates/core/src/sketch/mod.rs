//! Skill-leveled hand-drawn 3D sketches: one jittered stroke per physical
//! edge, displaced in the edge's local PCA frame and labeled with its source.

mod fields;
mod frame;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brep::{ChainComplex, CurveClass};
use crate::geom::{polyline_distance, Vec3};
use crate::par::Exec;
use crate::rng;

pub use fields::{
    arc_field, average_windows, general_field, line_field, moving_average, taper_basis, windows, ArcDraw, ArcField,
    ArcJitterParams, LineField, LineJitterParams,
};
pub use frame::{fit_circle, pca_frame, CircleFit, PcaFrame};

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("fewer than two distinct points")]
    DegenerateInput,
    #[error("points are collinear; no circle fits")]
    Collinear,
    #[error("skill level {0} is outside 1..=5")]
    Skill(u8),
    #[error("invalid sketch configuration: {0}")]
    Config(String),
}

pub const SKETCH_SCHEMA: &str = "a2z-sketch/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillParams {
    pub kappa: u8,
    pub c_l: f64,
}

impl SkillParams {
    pub fn new(kappa: u8, c_l: f64) -> Result<Self, SketchError> {
        if !(1..=5).contains(&kappa) {
            return Err(SketchError::Skill(kappa));
        }
        if !(1e-3..=1e-2).contains(&c_l) {
            return Err(SketchError::Config(format!("c_L = {c_l} is outside [1e-3, 1e-2]")));
        }
        Ok(SkillParams { kappa, c_l })
    }

    /// `(6 − κ)/5`.
    pub fn alpha(&self) -> f64 {
        alpha(self.kappa)
    }

    /// Base magnitude `α(κ)·c_L·L`.
    pub fn a0(&self, len: f64) -> f64 {
        self.alpha() * self.c_l * len
    }
}

pub fn alpha(kappa: u8) -> f64 {
    (6.0 - kappa as f64) / 5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SketchConfig {
    pub c_l: f64,
    /// Segment count per stroke at `α = 0`; scaled by `1 + 2α`.
    pub base_segments: usize,
    /// Window count for general curves.
    pub windows: usize,
    pub line: LineJitterParams,
    pub arc: ArcJitterParams,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig { c_l: 5e-3, base_segments: 12, windows: 4, line: LineJitterParams::default(), arc: ArcJitterParams::default() }
    }
}

impl SketchConfig {
    pub fn validate(&self) -> Result<(), SketchError> {
        if self.base_segments < 2 || self.windows == 0 {
            return Err(SketchError::Config("base_segments must be >= 2 and windows >= 1".into()));
        }
        self.line.validate()?;
        self.arc.validate()
    }

    pub fn segments(&self, kappa: u8) -> usize {
        (self.base_segments as f64 * (1.0 + 2.0 * alpha(kappa))).ceil() as usize
    }
}

/// Labels inherited from the source coedge and its mate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrokeLabels {
    pub edge_id: usize,
    pub mate_edge_id: usize,
    pub loop_id: usize,
    pub mate_loop_id: usize,
    /// Incident faces, sorted and deduplicated.
    pub face_ids: Vec<usize>,
    pub curve_class: CurveClass,
}

impl StrokeLabels {
    pub fn of(c: &ChainComplex, e: usize) -> Self {
        let m = c.mate[e];
        let mut face_ids = vec![c.owner_face(e), c.owner_face(m)];
        face_ids.sort_unstable();
        face_ids.dedup();
        StrokeLabels {
            edge_id: e,
            mate_edge_id: m,
            loop_id: c.parent[e],
            mate_loop_id: c.parent[m],
            face_ids,
            curve_class: c.coedges[e].curve_class,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchStroke {
    pub coedge_id: usize,
    pub skill: u8,
    pub points: Vec<Vec3>,
    /// Arc length of the source sample behind each point.
    pub s: Vec<f64>,
    pub labels: StrokeLabels,
    /// Arc-length intervals left undrawn, between the drawn samples bounding them.
    pub gaps: Vec<[f64; 2]>,
}

impl SketchStroke {
    /// Drawn pieces split at the gaps.
    pub fn segments(&self) -> Vec<&[Vec3]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..self.points.len() {
            if self.gaps.iter().any(|g| self.s[i - 1] <= g[0] && self.s[i] >= g[1]) {
                out.push(&self.points[start..i]);
                start = i;
            }
        }
        out.push(&self.points[start..]);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchFile {
    pub schema: String,
    pub skill: u8,
    pub seed: u64,
    pub strokes: Vec<SketchStroke>,
}

impl SketchFile {
    pub fn new(skill: u8, seed: u64, strokes: Vec<SketchStroke>) -> Self {
        SketchFile { schema: SKETCH_SCHEMA.to_string(), skill, seed, strokes }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sketch serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SketchError> {
        let f: SketchFile = serde_json::from_str(s).map_err(|e| SketchError::Config(e.to_string()))?;
        if f.schema != SKETCH_SCHEMA {
            return Err(SketchError::Config(format!("unexpected sketch schema {:?}", f.schema)));
        }
        Ok(f)
    }

    /// Flattened `(point, edge_id)` cloud for detector training.
    pub fn point_cloud(&self) -> Vec<(Vec3, usize)> {
        self.strokes.iter().flat_map(|s| s.points.iter().map(move |p| (*p, s.labels.edge_id))).collect()
    }
}

/// Uniform arc-length samples of a coedge: normalized `f`, arc length `s`, positions.
fn edge_samples(c: &ChainComplex, e: usize, n_seg: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec3>) {
    let ce = &c.coedges[e];
    let f: Vec<f64> = (0..=n_seg).map(|i| i as f64 / n_seg as f64).collect();
    let s = f.iter().map(|x| x * ce.arc_length).collect();
    let x = f.iter().map(|&x| ce.curve.eval(x).0).collect();
    (f, s, x)
}

/// Stroke for coedge `e`; the rng substream is keyed by the coedge id.
pub fn sketch_coedge(c: &ChainComplex, e: usize, sk: &SkillParams, cfg: &SketchConfig, seed: u64) -> Result<SketchStroke, SketchError> {
    let mut rng = rng::stream(seed, e as u64);
    let ce = &c.coedges[e];
    let len = ce.arc_length;
    let (f, s, x) = edge_samples(c, e, cfg.segments(sk.kappa));
    let mut keep = vec![true; x.len()];
    let mut gaps = Vec::new();
    let points: Vec<Vec3> = match ce.curve_class {
        CurveClass::Circle => {
            let fit = fit_circle(&x)?;
            let field = arc_field(&fit.theta, &f, len, fit.radius, sk, &cfg.arc, &mut rng);
            let (u_skip, u_start, u_span) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
            if u_skip < cfg.arc.skip_prob * sk.alpha() {
                let span = u_span * cfg.arc.skip_span * len;
                let a = 0.1 * len + u_start * (0.8 * len - span);
                for (k, &si) in keep.iter_mut().zip(&s) {
                    *k = !(si > a && si < a + span);
                }
                if let Some(first) = keep.iter().position(|k| !k) {
                    let last = keep.iter().rposition(|k| !k).expect("non-empty");
                    gaps.push([s[first - 1], s[last + 1]]);
                }
            }
            x.iter()
                .enumerate()
                .map(|(i, p)| {
                    let w = fit.frame.e2.dot(&(p - fit.frame.origin));
                    fit.center + fit.rho(fit.theta[i] + field.dtheta[i]) * (fit.radius + field.dr[i]) + fit.frame.e2 * w
                })
                .collect()
        }
        class => {
            let frame = pca_frame(&x)?;
            let field = if class == CurveClass::Line {
                line_field(&s, len, sk, &cfg.line, &mut rng)
            } else {
                general_field(&s, len, sk, &cfg.line, cfg.windows, &mut rng)
            };
            x.iter()
                .enumerate()
                .map(|(i, p)| {
                    let l = frame.local(p);
                    frame.world(&Vec3::new(l.x + field.dt[i], l.y + field.du[i], l.z))
                })
                .collect()
        }
    };
    let (points, s) = points.into_iter().zip(s).zip(&keep).filter(|(_, k)| **k).map(|(ps, _)| ps).unzip();
    Ok(SketchStroke { coedge_id: e, skill: sk.kappa, points, s, labels: StrokeLabels::of(c, e), gaps })
}

/// One stroke per physical edge, in representative-coedge order.
pub fn synthesize_sketch(c: &ChainComplex, kappa: u8, cfg: &SketchConfig, seed: u64, exec: Exec) -> Result<Vec<SketchStroke>, SketchError> {
    cfg.validate()?;
    let sk = SkillParams::new(kappa, cfg.c_l)?;
    exec.map(&c.physical_edges(), |&e| sketch_coedge(c, e, &sk, cfg, seed)).into_iter().collect()
}

/// Dense polyline of the true coedge geometry.
pub fn true_curve(c: &ChainComplex, e: usize, n: usize) -> Vec<Vec3> {
    let curve = &c.coedges[e].curve;
    (0..=n).map(|i| curve.eval(i as f64 / n as f64).0).collect()
}

/// Largest distance from stroke points to the true curve.
pub fn max_deviation(stroke: &SketchStroke, truth: &[Vec3]) -> f64 {
    stroke.points.iter().map(|p| polyline_distance(p, truth)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines (vertex-to-polyline).
pub fn hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    let ab = a.iter().map(|p| polyline_distance(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| polyline_distance(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}
