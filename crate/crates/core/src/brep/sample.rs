//! Dense point samples on BRep faces (uv grid), edges (arc length) and corners.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::geom::{frame_from, Mat3, Vec3};

use super::surface::{Surface, Tessellation};
use super::{BrepError, ChainComplex, CoEdge};

/// Entity kind a sample was drawn from. The declaration order is the tie-break
/// rank used by label assignment: corner before edge before face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Corner,
    Edge,
    Face,
}

impl SampleSource {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Self::Corner, Self::Edge, Self::Face].get(c as usize).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrepSample {
    pub position: Vec3,
    /// Columns `[t, u, n]`.
    pub frame: Mat3,
    pub source: SampleSource,
    pub source_id: usize,
    /// uv for face samples, `(s, 0)` arc parameter for edge samples.
    pub param: [f64; 2],
    /// Grid pitch for face samples, parent arc length for edge samples and the
    /// shortest incident arc length for corners.
    pub scale: f64,
    /// Principal curvatures, face samples only.
    pub curvature: Option<(f64, f64)>,
}

impl BrepSample {
    pub fn tangent(&self) -> Vec3 {
        self.frame.column(0).into()
    }

    pub fn normal(&self) -> Vec3 {
        self.frame.column(2).into()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BrepSamples {
    pub samples: Vec<BrepSample>,
}

impl BrepSamples {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn of_kind(&self, k: SampleSource) -> impl Iterator<Item = (usize, &BrepSample)> {
        self.samples.iter().enumerate().filter(move |(_, s)| s.source == k)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.position).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Face grid pitch as a fraction of the bounding-box diagonal.
    pub face_pitch_rel: f64,
    /// Edge sample spacing as a fraction of the parent arc length.
    pub edge_spacing_frac: f64,
    /// Cap each curved face's pitch at half its smallest curvature radius.
    pub curvature_refine: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { face_pitch_rel: 0.02, edge_spacing_frac: 0.05, curvature_refine: true }
    }
}

fn intervals(extent: f64, pitch: f64) -> usize {
    ((extent / pitch) - 1e-9).ceil().max(1.0) as usize
}

/// 2D point-in-polygon by crossing number.
fn inside_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_distance(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (x, y) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
            (x * x + y * y).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Local quadric fit `z = a x² + b xy + c y² + d x + e y + f` in the sample frame;
/// principal curvatures are the negated eigenvalues of the fitted Hessian.
fn quadric_curvature(frame: &Mat3, p: &Vec3, neighbors: &[Vec3]) -> (f64, f64) {
    if neighbors.len() < 6 {
        return (0.0, 0.0);
    }
    let (t, u, n): (Vec3, Vec3, Vec3) = (frame.column(0).into(), frame.column(1).into(), frame.column(2).into());
    let m = neighbors.len();
    let mut a = DMatrix::zeros(m, 6);
    let mut z = DVector::zeros(m);
    for (i, q) in neighbors.iter().enumerate() {
        let d = q - p;
        let (x, y) = (d.dot(&t), d.dot(&u));
        a.row_mut(i).copy_from_slice(&[x * x, x * y, y * y, x, y, 1.0]);
        z[i] = d.dot(&n);
    }
    let Ok(sol) = a.svd(true, true).solve(&z, 1e-12) else {
        return (0.0, 0.0);
    };
    let h = Matrix2::new(2.0 * sol[0], sol[1], sol[1], 2.0 * sol[2]);
    let ev = h.symmetric_eigenvalues();
    let (k1, k2) = (-ev[0], -ev[1]);
    if k1.abs() >= k2.abs() {
        (k1, k2)
    } else {
        (k2, k1)
    }
}

fn sample_tessellation(t: &Tessellation, face_id: usize, pitch: f64, reversed: bool) -> Vec<BrepSample> {
    let normals = t.vertex_normals();
    let sign = if reversed { -1.0 } else { 1.0 };
    let mut seen: HashMap<[i64; 3], ()> = HashMap::new();
    let q = pitch * 1e-3;
    let mut pts: Vec<(Vec3, Vec3, [f64; 2])> = Vec::new();
    for (ti, tri) in t.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|i| t.vertices[i]);
        let [na, nb, nc] = tri.map(|i| normals[i]);
        let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        let k = intervals(longest, pitch);
        for i in 0..=k {
            for j in 0..=(k - i) {
                let (wb, wc) = (i as f64 / k as f64, j as f64 / k as f64);
                let wa = 1.0 - wb - wc;
                let p = a * wa + b * wb + c * wc;
                let key = [(p.x / q).round() as i64, (p.y / q).round() as i64, (p.z / q).round() as i64];
                if seen.insert(key, ()).is_none() {
                    let n = (na * wa + nb * wb + nc * wc).normalize() * sign;
                    pts.push((p, n, [ti as f64, 0.0]));
                }
            }
        }
    }
    let mean_edge = {
        let mut acc = 0.0;
        for tri in &t.triangles {
            for k in 0..3 {
                acc += (t.vertices[tri[k]] - t.vertices[tri[(k + 1) % 3]]).norm();
            }
        }
        acc / (3 * t.triangles.len()).max(1) as f64
    };
    let radius = 2.5 * mean_edge;
    pts.into_iter()
        .map(|(p, n, param)| {
            let frame = frame_from(&crate::geom::perpendicular(&n), &n);
            let neigh: Vec<Vec3> = t.vertices.iter().filter(|v| (*v - p).norm() <= radius).copied().collect();
            let k = quadric_curvature(&frame, &p, &neigh);
            BrepSample {
                position: p,
                frame,
                source: SampleSource::Face,
                source_id: face_id,
                param,
                scale: pitch,
                curvature: Some(k),
            }
        })
        .collect()
}

/// Samples a face on its uv grid with spacing at most `pitch`, discarding
/// points outside the trimming loops (planes) or the uv box (curved faces).
pub fn sample_face_uv(c: &ChainComplex, face_id: usize, pitch: f64) -> Result<Vec<BrepSample>, BrepError> {
    assert!(pitch > 0.0, "pitch must be positive");
    let f = &c.faces[face_id];
    if f.area < c.tol_area() {
        return Err(BrepError::DegenerateFace(face_id));
    }
    if let Surface::Mesh(t) = &f.surface {
        return Ok(sample_tessellation(t, face_id, pitch, f.reversed));
    }
    let s = &f.surface;
    let d = f.uv_domain;
    let (ext_u, ext_v) = s.domain_extent(d);
    let (nu, nv) = (intervals(ext_u, pitch), intervals(ext_v, pitch));
    let closed_u = s.is_u_periodic() && ((d[1] - d[0]) - TAU).abs() < 1e-9;
    let closed_v = s.is_v_periodic() && ((d[3] - d[2]) - TAU).abs() < 1e-9;

    // trimming polygons in uv (planes only)
    let trims: Option<Vec<Vec<[f64; 2]>>> = matches!(s, Surface::Plane(_)).then(|| {
        f.loop_ids
            .iter()
            .map(|&l| c.loop_polyline(l).iter().map(|p| s.project(p, None).uv).collect())
            .collect()
    });
    let tol = c.tol_geo.max(1e-12 * (ext_u + ext_v));

    let mut out = Vec::new();
    for j in 0..(if closed_v { nv } else { nv + 1 }) {
        let v = d[2] + (d[3] - d[2]) * j as f64 / nv as f64;
        for i in 0..(if closed_u { nu } else { nu + 1 }) {
            let u = d[0] + (d[1] - d[0]) * i as f64 / nu as f64;
            if let Some(trims) = &trims {
                let p = [u, v];
                let (outer, inner) = trims.split_first().expect("face has loops");
                let in_outer = inside_polygon(p, outer) || polygon_distance(p, outer) <= tol;
                let in_hole = inner.iter().any(|h| inside_polygon(p, h) && polygon_distance(p, h) > tol);
                if !in_outer || in_hole {
                    continue;
                }
            }
            let k = s.curvatures(u, v).expect("analytic surface");
            let k = if f.reversed { (-k.0, -k.1) } else { k };
            out.push(BrepSample {
                position: s.point(u, v),
                frame: s.frame(u, v, f.reversed),
                source: SampleSource::Face,
                source_id: face_id,
                param: [u, v],
                scale: pitch,
                curvature: Some(k),
            });
        }
    }
    // sphere poles collapse a whole grid row onto one point
    if matches!(s, Surface::Sphere { .. }) {
        let mut seen = Vec::<Vec3>::new();
        out.retain(|smp| {
            if seen.iter().any(|q| (q - smp.position).norm() <= tol) {
                false
            } else {
                seen.push(smp.position);
                true
            }
        });
    }
    Ok(out)
}

/// Samples a coedge at uniform arc-length intervals no longer than `spacing`.
/// Bounded curves include both endpoints; closed curves omit the seam duplicate.
pub fn sample_edge_arclength(e: &CoEdge, spacing: f64, tol: f64) -> Result<Vec<BrepSample>, BrepError> {
    assert!(spacing > 0.0, "spacing must be positive");
    let len = e.arc_length;
    if len < tol {
        return Err(BrepError::DegenerateEdge(e.id));
    }
    let closed = e.is_closed();
    let n = intervals(len, spacing);
    let count = if closed { n } else { n + 1 };
    Ok((0..count)
        .map(|i| {
            let f = i as f64 / n as f64;
            let (p, t) = e.curve.eval(f);
            let frame = frame_from(&t, &e.curve.normal_hint(f));
            BrepSample {
                position: p,
                frame,
                source: SampleSource::Edge,
                source_id: e.id,
                param: [f * len, 0.0],
                scale: len,
                curvature: None,
            }
        })
        .collect())
}

/// Per-face pitch: the global pitch, optionally capped by half the smallest
/// curvature radius found on a coarse probe of the uv box.
fn face_pitch(c: &ChainComplex, face_id: usize, pitch: f64, refine: bool) -> f64 {
    let f = &c.faces[face_id];
    if !refine || !f.surface.is_analytic() {
        return pitch;
    }
    let d = f.uv_domain;
    let mut kmax: f64 = 0.0;
    for i in 0..=4 {
        for j in 0..=4 {
            let u = d[0] + (d[1] - d[0]) * i as f64 / 4.0;
            let v = d[2] + (d[3] - d[2]) * j as f64 / 4.0;
            if let Some((k1, k2)) = f.surface.curvatures(u, v) {
                kmax = kmax.max(k1.abs()).max(k2.abs());
            }
        }
    }
    if kmax > 0.0 {
        pitch.min(0.5 / kmax)
    } else {
        pitch
    }
}

/// Samples every face, every physical edge (once, on its representative
/// coedge) and every corner. Edge and corner frames take their normal from
/// the mean of the incident face normals.
pub fn sample_brep(c: &ChainComplex, cfg: &SamplingConfig) -> Result<BrepSamples, BrepError> {
    let pitch = cfg.face_pitch_rel * c.diagonal();
    let mut samples = Vec::new();

    for v in 0..c.corners.len() {
        let incident = c.coedges_at_corner(v);
        let scale = incident.iter().map(|&e| c.coedges[e].arc_length).fold(f64::INFINITY, f64::min);
        let scale = if scale.is_finite() { scale } else { c.diagonal() };
        let p = c.corners[v].position;
        let mut n = Vec3::zeros();
        for fid in c.faces_of(SampleSource::Corner, v) {
            n += c.faces[fid].normal_near(&p);
        }
        let n = if n.norm() > 1e-12 { n } else { Vec3::z() };
        samples.push(BrepSample {
            position: p,
            frame: frame_from(&crate::geom::perpendicular(&n.normalize()), &n),
            source: SampleSource::Corner,
            source_id: v,
            param: [0.0, 0.0],
            scale,
            curvature: None,
        });
    }

    for e in c.physical_edges() {
        let edge = &c.coedges[e];
        let spacing = (cfg.edge_spacing_frac * edge.arc_length).min(pitch);
        let (fa, fb) = c.incident_faces(e);
        for mut s in sample_edge_arclength(edge, spacing, c.tol_geo)? {
            let n = c.faces[fa].normal_near(&s.position) + if fb != fa { c.faces[fb].normal_near(&s.position) } else { Vec3::zeros() };
            if n.norm() > 1e-9 {
                s.frame = frame_from(&s.tangent(), &n);
            }
            samples.push(s);
        }
    }

    for f in 0..c.faces.len() {
        samples.extend(sample_face_uv(c, f, face_pitch(c, f, pitch, cfg.curvature_refine))?);
    }
    Ok(BrepSamples { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_in_polygon_basics() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(inside_polygon([0.5, 0.5], &sq));
        assert!(!inside_polygon([1.5, 0.5], &sq));
        assert_eq!(polygon_distance([0.5, 0.0], &sq), 0.0);
    }

    #[test]
    fn quadric_fit_recovers_paraboloid() {
        // z = -0.5 (x² + y²) has curvature 1 at the origin with +z normal
        let mut pts = Vec::new();
        for i in -3..=3 {
            for j in -3..=3 {
                let (x, y) = (i as f64 * 0.01, j as f64 * 0.01);
                pts.push(Vec3::new(x, y, -0.5 * (x * x + y * y)));
            }
        }
        let (k1, k2) = quadric_curvature(&Mat3::identity(), &Vec3::zeros(), &pts);
        assert!((k1 - 1.0).abs() < 1e-9 && (k2 - 1.0).abs() < 1e-9, "{k1} {k2}");
    }
}
