//! Procedural test solids: straight extrusions of planar profiles (boxes,
//! cylinders, filleted blocks, plates with holes, spline-walled blocks) with
//! a matching low-resolution triangle mesh, plus a standalone torus mesh.

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::brep::{
    BrepError, BrepFile, ChainComplex, CoEdgeRecord, CornerRecord, CurveClass, FaceRecord, LoopRecord, SurfaceClass,
    TessellationRecord, Transitions, SCHEMA_VERSION,
};
use crate::geom::{triangle_area, Vec3};
use crate::mesh::ScanMesh;

pub type P2 = [f64; 2];

/// Profile segment from one path vertex to the next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Seg {
    Line,
    Arc { center: P2, ccw: bool },
    /// Interior points of a free-form curve.
    Spline(Vec<P2>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Circle { center: P2, radius: f64 },
    /// Closed path: segment `i` runs from vertex `i` to vertex `i + 1`.
    Path(Vec<(P2, Seg)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrusion {
    pub outer: Shape,
    pub holes: Vec<Shape>,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TessOptions {
    /// Target edge length of the low-resolution mesh.
    pub edge_len: f64,
    /// Largest angle subtended by one chord of an arc.
    pub max_angle: f64,
}

impl Default for TessOptions {
    fn default() -> Self {
        TessOptions { edge_len: 0.25, max_angle: std::f64::consts::PI / 8.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub brep: ChainComplex,
    pub mesh: ScanMesh,
}

#[derive(Clone, Debug, PartialEq)]
enum Geom {
    Line,
    /// Angles in traversal order; a full circle has `|a1 − a0| = 2π`.
    Arc { c: P2, r: f64, a0: f64, a1: f64 },
    /// All points from start to end.
    Spline(Vec<P2>),
}

#[derive(Clone, Debug, PartialEq)]
struct Piece {
    a: P2,
    b: P2,
    geom: Geom,
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn len2(a: P2) -> f64 {
    a[0].hypot(a[1])
}

impl Piece {
    fn reversed(&self) -> Piece {
        let geom = match &self.geom {
            Geom::Line => Geom::Line,
            Geom::Arc { c, r, a0, a1 } => Geom::Arc { c: *c, r: *r, a0: *a1, a1: *a0 },
            Geom::Spline(p) => Geom::Spline(p.iter().rev().copied().collect()),
        };
        Piece { a: self.b, b: self.a, geom }
    }

    fn is_closed(&self) -> bool {
        matches!(self.geom, Geom::Arc { a0, a1, .. } if ((a1 - a0).abs() - TAU).abs() < 1e-12)
    }

    fn length(&self) -> f64 {
        match &self.geom {
            Geom::Line => len2(sub(self.b, self.a)),
            Geom::Arc { r, a0, a1, .. } => r * (a1 - a0).abs(),
            Geom::Spline(p) => p.windows(2).map(|w| len2(sub(w[1], w[0]))).sum(),
        }
    }

    /// Twice the signed area contribution `∮ x dy − y dx`.
    fn area2(&self) -> f64 {
        match &self.geom {
            Geom::Line => self.a[0] * self.b[1] - self.b[0] * self.a[1],
            Geom::Arc { c, r, a0, a1 } => {
                r * r * (a1 - a0) + r * (c[0] * (a1.sin() - a0.sin()) - c[1] * (a1.cos() - a0.cos()))
            }
            Geom::Spline(p) => p.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum(),
        }
    }

    /// Points from `a` to `b` inclusive with `n` intervals (splines use their own points).
    fn points(&self, n: usize) -> Vec<P2> {
        match &self.geom {
            Geom::Line => (0..=n).map(|k| lerp2(self.a, self.b, k as f64 / n as f64)).collect(),
            Geom::Arc { c, r, a0, a1 } => (0..=n)
                .map(|k| {
                    let t = a0 + (a1 - a0) * k as f64 / n as f64;
                    [c[0] + r * t.cos(), c[1] + r * t.sin()]
                })
                .collect(),
            Geom::Spline(p) => p.clone(),
        }
    }

    fn intervals(&self, o: &TessOptions) -> usize {
        let by_len = (self.length() / o.edge_len - 1e-9).ceil().max(1.0) as usize;
        match &self.geom {
            Geom::Line => by_len,
            Geom::Arc { a0, a1, .. } => by_len.max(((a1 - a0).abs() / o.max_angle - 1e-9).ceil() as usize).max(3),
            Geom::Spline(p) => p.len() - 1,
        }
    }
}

fn lerp2(a: P2, b: P2, t: f64) -> P2 {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

fn pieces(shape: &Shape) -> Vec<Piece> {
    match shape {
        Shape::Circle { center, radius } => {
            let p = [center[0] + radius, center[1]];
            vec![Piece { a: p, b: p, geom: Geom::Arc { c: *center, r: *radius, a0: 0.0, a1: TAU } }]
        }
        Shape::Path(v) => (0..v.len())
            .map(|i| {
                let (a, seg) = (v[i].0, &v[i].1);
                let b = v[(i + 1) % v.len()].0;
                let geom = match seg {
                    Seg::Line => Geom::Line,
                    Seg::Arc { center, ccw } => {
                        let a0 = (a[1] - center[1]).atan2(a[0] - center[0]);
                        let mut a1 = (b[1] - center[1]).atan2(b[0] - center[0]);
                        if *ccw && a1 <= a0 {
                            a1 += TAU;
                        } else if !*ccw && a1 >= a0 {
                            a1 -= TAU;
                        }
                        Geom::Arc { c: *center, r: len2(sub(a, *center)), a0, a1 }
                    }
                    Seg::Spline(mid) => {
                        let mut p = vec![a];
                        p.extend(mid.iter().copied());
                        p.push(b);
                        Geom::Spline(p)
                    }
                };
                Piece { a, b, geom }
            })
            .collect(),
    }
}

fn orient(ps: Vec<Piece>, ccw: bool) -> Vec<Piece> {
    let area: f64 = ps.iter().map(Piece::area2).sum();
    if (area > 0.0) == ccw {
        ps
    } else {
        ps.iter().rev().map(Piece::reversed).collect()
    }
}

fn p3(p: P2, z: f64) -> Vec3 {
    Vec3::new(p[0], p[1], z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeKey {
    Horizontal { lp: usize, piece: usize, top: bool },
    Vertical { lp: usize, vertex: usize },
}

#[derive(Default)]
struct Builder {
    corners: Vec<CornerRecord>,
    coedges: Vec<CoEdgeRecord>,
    faces: Vec<FaceRecord>,
    loops: Vec<LoopRecord>,
    keys: Vec<EdgeKey>,
}

impl Builder {
    fn push_coedge(&mut self, key: EdgeKey, rec: CoEdgeRecord) -> usize {
        let id = self.coedges.len();
        self.coedges.push(CoEdgeRecord { id, ..rec });
        self.keys.push(key);
        id
    }

    fn push_loop(&mut self, face: usize, coedge_ids: Vec<usize>) -> usize {
        let id = self.loops.len();
        self.loops.push(LoopRecord { id, face, coedge_ids });
        self.faces[face].loop_ids.push(id);
        id
    }

    fn push_face(&mut self, class: SurfaceClass, params: Vec<f64>, area: f64) -> usize {
        let id = self.faces.len();
        self.faces.push(FaceRecord {
            id,
            surface_class: class,
            surface_params: params,
            area,
            loop_ids: Vec::new(),
            reversed: false,
            uv_domain: None,
            tessellation: None,
        });
        id
    }

    fn finish(self) -> Result<ChainComplex, BrepError> {
        let ne = self.coedges.len();
        let mut next = vec![0; ne];
        let mut parent = vec![0; ne];
        for l in &self.loops {
            for (i, &e) in l.coedge_ids.iter().enumerate() {
                next[e] = l.coedge_ids[(i + 1) % l.coedge_ids.len()];
                parent[e] = l.id;
            }
        }
        let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
        for (e, k) in self.keys.iter().enumerate() {
            by_key.entry(*k).or_default().push(e);
        }
        let mut mate = (0..ne).collect::<Vec<_>>();
        for pair in by_key.values() {
            if let [a, b] = pair[..] {
                mate[a] = b;
                mate[b] = a;
            }
        }
        BrepFile {
            schema: SCHEMA_VERSION.to_string(),
            corners: self.corners,
            coedges: self.coedges,
            faces: self.faces,
            loops: self.loops,
            transitions: Transitions { next, parent, mate },
        }
        .into_complex()
    }
}

/// Curve record of a profile piece at height `z`.
fn curve_record(p: &Piece, z: f64, endpoints: Vec<usize>) -> CoEdgeRecord {
    let (class, params, polyline) = match &p.geom {
        Geom::Line => {
            let (a, b) = (p3(p.a, z), p3(p.b, z));
            (CurveClass::Line, vec![a.x, a.y, a.z, b.x, b.y, b.z], vec![a, b])
        }
        Geom::Arc { c, r, a0, a1 } => {
            let n = ((a1 - a0).abs() / (TAU / 64.0)).ceil().max(8.0) as usize;
            let pts = p.points(n).into_iter().map(|q| p3(q, z)).collect();
            (CurveClass::Circle, vec![c[0], c[1], z, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, *r, *a0, *a1], pts)
        }
        Geom::Spline(pts) => (CurveClass::Bspline, Vec::new(), pts.iter().map(|&q| p3(q, z)).collect()),
    };
    CoEdgeRecord {
        id: 0,
        curve_class: class,
        curve_params: params,
        arc_length: p.length(),
        endpoints,
        polyline: polyline.iter().map(|v| [v.x, v.y, v.z]).collect(),
    }
}

struct Prepared {
    loops: Vec<Vec<Piece>>,
    height: f64,
}

fn prepare(x: &Extrusion) -> Prepared {
    let mut loops = vec![orient(pieces(&x.outer), true)];
    loops.extend(x.holes.iter().map(|h| orient(pieces(h), false)));
    Prepared { loops, height: x.height }
}

/// Strip tessellation of a free-form side wall, outward normals.
fn wall_tessellation(pts: &[P2], h: f64, nz: usize) -> TessellationRecord {
    let mut vertices = Vec::new();
    for k in 0..=nz {
        let z = h * k as f64 / nz as f64;
        vertices.extend(pts.iter().map(|p| [p[0], p[1], z]));
    }
    let w = pts.len();
    let mut triangles = Vec::new();
    for k in 0..nz {
        for j in 0..w - 1 {
            let (a, b) = (k * w + j, k * w + j + 1);
            let (c, d) = (b + w, a + w);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TessellationRecord { vertices, triangles }
}

fn vertical_layers(h: f64, o: &TessOptions) -> usize {
    (h / o.edge_len - 1e-9).ceil().max(1.0) as usize
}

/// Builds the BRep of a straight extrusion along +z from `z = 0`.
pub fn extrude_brep(x: &Extrusion, o: &TessOptions) -> Result<ChainComplex, BrepError> {
    let pr = prepare(x);
    let h = pr.height;
    let mut b = Builder::default();
    let net_area: f64 = pr.loops.iter().flatten().map(Piece::area2).sum::<f64>() / 2.0;

    // corner ids per (loop, vertex, layer)
    let mut corner = HashMap::new();
    for (li, lp) in pr.loops.iter().enumerate() {
        if lp.len() == 1 && lp[0].is_closed() {
            continue;
        }
        for (vi, p) in lp.iter().enumerate() {
            for (layer, z) in [(0, 0.0), (1, h)] {
                let id = b.corners.len();
                b.corners.push(CornerRecord { id, position: [p.a[0], p.a[1], z] });
                corner.insert((li, vi, layer), id);
            }
        }
    }
    let ends = |li: usize, vi: usize, n: usize, layer: usize, corner: &HashMap<(usize, usize, usize), usize>| {
        match (corner.get(&(li, vi, layer)), corner.get(&(li, (vi + 1) % n, layer))) {
            (Some(&s), Some(&e)) => vec![s, e],
            _ => Vec::new(),
        }
    };

    let bottom = b.push_face(SurfaceClass::Plane, vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0], net_area);
    let top = b.push_face(SurfaceClass::Plane, vec![0.0, 0.0, h, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0], net_area);
    for (li, lp) in pr.loops.iter().enumerate() {
        let n = lp.len();
        // bottom loop runs the profile backwards
        let ids: Vec<usize> = (0..n)
            .rev()
            .map(|pi| {
                let rev = lp[pi].reversed();
                let e = ends(li, pi, n, 0, &corner).into_iter().rev().collect();
                b.push_coedge(EdgeKey::Horizontal { lp: li, piece: pi, top: false }, curve_record(&rev, 0.0, e))
            })
            .collect();
        b.push_loop(bottom, ids);
    }
    for (li, lp) in pr.loops.iter().enumerate() {
        let n = lp.len();
        let ids: Vec<usize> = (0..n)
            .map(|pi| {
                let e = ends(li, pi, n, 1, &corner);
                b.push_coedge(EdgeKey::Horizontal { lp: li, piece: pi, top: true }, curve_record(&lp[pi], h, e))
            })
            .collect();
        b.push_loop(top, ids);
    }

    let nz = vertical_layers(h, o);
    for (li, lp) in pr.loops.iter().enumerate() {
        let n = lp.len();
        for (pi, p) in lp.iter().enumerate() {
            let area = p.length() * h;
            let face = match &p.geom {
                Geom::Line => {
                    let d = sub(p.b, p.a);
                    let l = len2(d);
                    let f = b.push_face(
                        SurfaceClass::Plane,
                        vec![p.a[0], p.a[1], 0.0, d[1] / l, -d[0] / l, 0.0, d[0] / l, d[1] / l, 0.0],
                        area,
                    );
                    b.faces[f].uv_domain = Some([0.0, l, 0.0, h]);
                    f
                }
                Geom::Arc { c, r, a0, a1 } => {
                    let f = b.push_face(SurfaceClass::Cylinder, vec![c[0], c[1], 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, *r], area);
                    b.faces[f].reversed = a1 < a0;
                    b.faces[f].uv_domain = Some([a0.min(*a1), a0.max(*a1), 0.0, h]);
                    f
                }
                Geom::Spline(pts) => {
                    let f = b.push_face(SurfaceClass::Bspline, Vec::new(), area);
                    b.faces[f].tessellation = Some(wall_tessellation(pts, h, nz));
                    f
                }
            };
            let bottom_edge =
                b.push_coedge(EdgeKey::Horizontal { lp: li, piece: pi, top: false }, curve_record(p, 0.0, ends(li, pi, n, 0, &corner)));
            let top_edge = b.push_coedge(
                EdgeKey::Horizontal { lp: li, piece: pi, top: true },
                curve_record(&p.reversed(), h, ends(li, pi, n, 1, &corner).into_iter().rev().collect()),
            );
            if p.is_closed() {
                b.push_loop(face, vec![bottom_edge]);
                b.push_loop(face, vec![top_edge]);
                continue;
            }
            let vertical = |b: &mut Builder, vi: usize, up: bool| {
                let (lo, hi) = (corner[&(li, vi, 0)], corner[&(li, vi, 1)]);
                let q = lp[vi].a;
                let (s, e, zs, ze) = if up { (lo, hi, 0.0, h) } else { (hi, lo, h, 0.0) };
                let line = CoEdgeRecord {
                    id: 0,
                    curve_class: CurveClass::Line,
                    curve_params: vec![q[0], q[1], zs, q[0], q[1], ze],
                    arc_length: h,
                    endpoints: vec![s, e],
                    polyline: vec![[q[0], q[1], zs], [q[0], q[1], ze]],
                };
                b.push_coedge(EdgeKey::Vertical { lp: li, vertex: vi }, line)
            };
            let up = vertical(&mut b, (pi + 1) % n, true);
            let down = vertical(&mut b, pi, false);
            b.push_loop(face, vec![bottom_edge, up, top_edge, down]);
        }
    }
    b.finish()
}

/// Low-resolution closed triangle mesh of the extrusion; triangle face ids
/// match [`extrude_brep`].
pub fn extrude_mesh(x: &Extrusion, o: &TessOptions) -> ScanMesh {
    let pr = prepare(x);
    let h = pr.height;
    let nz = vertical_layers(h, o);
    // ring points per loop and the starting ring index of each piece
    let mut rings: Vec<(Vec<P2>, Vec<usize>)> = Vec::new();
    for lp in &pr.loops {
        let mut pts = Vec::new();
        let mut starts = Vec::new();
        for p in lp {
            starts.push(pts.len());
            let q = p.points(p.intervals(o));
            pts.extend_from_slice(&q[..q.len() - 1]);
        }
        rings.push((pts, starts));
    }
    let mut positions = Vec::new();
    let mut base = Vec::new();
    for (pts, _) in &rings {
        base.push(positions.len());
        for k in 0..=nz {
            let z = h * k as f64 / nz as f64;
            positions.extend(pts.iter().map(|&p| p3(p, z)));
        }
    }
    let vid = |li: usize, j: usize, k: usize| -> u32 {
        let w = rings[li].0.len();
        (base[li] + k * w + j % w) as u32
    };
    let mut triangles = Vec::new();
    let mut faces = Vec::new();
    let mut face = 2u32;
    for (li, (pts, starts)) in rings.iter().enumerate() {
        for (pi, &s) in starts.iter().enumerate() {
            let e = starts.get(pi + 1).copied().unwrap_or(pts.len());
            for j in s..e {
                for k in 0..nz {
                    let (a, b, c, d) = (vid(li, j, k), vid(li, j + 1, k), vid(li, j + 1, k + 1), vid(li, j, k + 1));
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                    faces.extend([face, face]);
                }
            }
            face += 1;
        }
    }
    // caps
    let mut flat = Vec::new();
    let mut holes = Vec::new();
    let mut cap_index = Vec::new();
    for (li, (pts, _)) in rings.iter().enumerate() {
        if li > 0 {
            holes.push(flat.len() / 2);
        }
        for (j, p) in pts.iter().enumerate() {
            flat.extend_from_slice(p);
            cap_index.push((li, j));
        }
    }
    let tris = earcutr::earcut(&flat, &holes, 2).expect("profile triangulates");
    // earcut drops collinear ring points; reinsert them on the triangle edges
    let pt = |i: usize| [flat[2 * i], flat[2 * i + 1]];
    let on_segment = |a: usize, b: usize| -> Vec<usize> {
        let (pa, pb) = (pt(a), pt(b));
        let d = sub(pb, pa);
        let l2 = d[0] * d[0] + d[1] * d[1];
        let mut hits: Vec<(f64, usize)> = (0..cap_index.len())
            .filter(|&i| i != a && i != b)
            .filter_map(|i| {
                let q = sub(pt(i), pa);
                let t = (q[0] * d[0] + q[1] * d[1]) / l2;
                let off = (q[0] * d[1] - q[1] * d[0]).abs() / l2.sqrt();
                (t > 1e-9 && t < 1.0 - 1e-9 && off < 1e-9 * (1.0 + l2.sqrt())).then_some((t, i))
            })
            .collect();
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));
        hits.into_iter().map(|h| h.1).collect()
    };
    // zero-area triangles along collinear runs are covered by their neighbours
    let scale2 = flat.chunks(2).map(|q| q[0] * q[0] + q[1] * q[1]).fold(1.0, f64::max);
    let corners: Vec<&[usize]> = tris
        .chunks(3)
        .filter(|t| {
            let (u, v) = (sub(pt(t[1]), pt(t[0])), sub(pt(t[2]), pt(t[0])));
            (u[0] * v[1] - u[1] * v[0]).abs() > 1e-12 * scale2
        })
        .collect();
    let polygons: Vec<Vec<usize>> = corners
        .iter()
        .map(|t| {
            let mut poly = Vec::new();
            for k in 0..3 {
                poly.push(t[k]);
                poly.extend(on_segment(t[k], t[(k + 1) % 3]));
            }
            poly
        })
        .collect();
    for (cap, k, up) in [(0u32, 0, false), (1u32, nz, true)] {
        let z = h * k as f64 / nz as f64;
        for (pi, poly) in polygons.iter().enumerate() {
            let ring: Vec<u32> = poly.iter().map(|&i| vid(cap_index[i].0, cap_index[i].1, k)).collect();
            let fan: Vec<[u32; 3]> = if ring.len() == 3 {
                vec![[ring[0], ring[1], ring[2]]]
            } else {
                // the earcut triangle is strictly convex, its centroid strictly interior
                let c = corners[pi].iter().fold([0.0, 0.0], |acc, &i| [acc[0] + pt(i)[0], acc[1] + pt(i)[1]]);
                let centre = positions.len() as u32;
                positions.push(p3([c[0] / 3.0, c[1] / 3.0], z));
                (0..ring.len()).map(|j| [centre, ring[j], ring[(j + 1) % ring.len()]]).collect()
            };
            for mut v in fan {
                let n = (positions[v[1] as usize] - positions[v[0] as usize]).cross(&(positions[v[2] as usize] - positions[v[0] as usize]));
                if (n.z > 0.0) != up {
                    v.swap(1, 2);
                }
                if triangle_area(&positions[v[0] as usize], &positions[v[1] as usize], &positions[v[2] as usize]) > 0.0 {
                    triangles.push(v);
                    faces.push(cap);
                }
            }
        }
    }
    let mut m = ScanMesh::new(positions, triangles);
    m.triangle_faces = Some(faces);
    m
}

pub fn extrusion_fixture(name: &str, x: &Extrusion, o: &TessOptions) -> Fixture {
    Fixture {
        name: name.to_string(),
        brep: extrude_brep(x, o).expect("fixture profiles are valid"),
        mesh: extrude_mesh(x, o),
    }
}

pub fn rect(w: f64, d: f64) -> Shape {
    Shape::Path(vec![([0.0, 0.0], Seg::Line), ([w, 0.0], Seg::Line), ([w, d], Seg::Line), ([0.0, d], Seg::Line)])
}

/// Rectangle with all four vertical edges rounded by radius `r`.
pub fn rounded_rect(w: f64, d: f64, r: f64) -> Shape {
    let arc = |c: P2| Seg::Arc { center: c, ccw: true };
    Shape::Path(vec![
        ([r, 0.0], Seg::Line),
        ([w - r, 0.0], arc([w - r, r])),
        ([w, r], Seg::Line),
        ([w, d - r], arc([w - r, d - r])),
        ([w - r, d], Seg::Line),
        ([r, d], arc([r, d - r])),
        ([0.0, d - r], Seg::Line),
        ([0.0, r], arc([r, r])),
    ])
}

pub fn box_extrusion(w: f64, d: f64, h: f64) -> Extrusion {
    Extrusion { outer: rect(w, d), holes: Vec::new(), height: h }
}

/// Unit cube with one quad per face: 12 triangles.
pub fn unit_cube() -> Fixture {
    extrusion_fixture("cube", &box_extrusion(1.0, 1.0, 1.0), &TessOptions { edge_len: 1.0, ..Default::default() })
}

pub fn cylinder(r: f64, h: f64) -> Extrusion {
    Extrusion { outer: Shape::Circle { center: [0.0, 0.0], radius: r }, holes: Vec::new(), height: h }
}

pub fn filleted_block(w: f64, d: f64, h: f64, r: f64) -> Extrusion {
    Extrusion { outer: rounded_rect(w, d, r), holes: Vec::new(), height: h }
}

pub fn plate_with_holes(w: f64, d: f64, h: f64, holes: &[(P2, f64)]) -> Extrusion {
    Extrusion {
        outer: rect(w, d),
        holes: holes.iter().map(|&(center, radius)| Shape::Circle { center, radius }).collect(),
        height: h,
    }
}

/// Block whose front wall is a free-form wave.
pub fn spline_block(w: f64, d: f64, h: f64, amp: f64) -> Extrusion {
    let n = 24;
    let mid: Vec<P2> = (1..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            [w * t, amp * (TAU * t).sin()]
        })
        .collect();
    Extrusion {
        outer: Shape::Path(vec![([0.0, 0.0], Seg::Spline(mid)), ([w, 0.0], Seg::Line), ([w, d], Seg::Line), ([0.0, d], Seg::Line)]),
        holes: Vec::new(),
        height: h,
    }
}

/// Box with one small through hole; its hole loops are tiny.
pub fn cube_with_small_hole() -> Fixture {
    extrusion_fixture("cube-small-hole", &plate_with_holes(2.0, 2.0, 1.0, &[([1.0, 1.0], 0.08)]), &TessOptions::default())
}

/// Twenty solids spanning boxes, cylinders, filleted blocks and plates with holes.
pub fn suite() -> Vec<Fixture> {
    let o = TessOptions::default();
    let mut v = Vec::new();
    for (i, (w, d, h)) in [(1.0, 1.0, 1.0), (2.0, 1.0, 0.5), (1.5, 1.5, 0.75), (3.0, 1.0, 1.0), (1.0, 2.0, 1.5)].into_iter().enumerate() {
        v.push(extrusion_fixture(&format!("box-{i:02}"), &box_extrusion(w, d, h), &o));
    }
    for (i, (r, h)) in [(0.5, 1.0), (1.0, 0.5), (0.3, 1.5), (0.8, 0.8)].into_iter().enumerate() {
        v.push(extrusion_fixture(&format!("cylinder-{i:02}"), &cylinder(r, h), &o));
    }
    for (i, (w, d, h, r)) in [(2.0, 1.0, 0.5, 0.2), (1.5, 1.5, 1.0, 0.3), (3.0, 2.0, 0.5, 0.5), (1.0, 1.0, 1.0, 0.1), (2.0, 2.0, 0.4, 0.6)]
        .into_iter()
        .enumerate()
    {
        v.push(extrusion_fixture(&format!("filleted-{i:02}"), &filleted_block(w, d, h, r), &o));
    }
    let plates: [&[(P2, f64)]; 6] = [
        &[([1.0, 1.0], 0.3)],
        &[([0.5, 0.5], 0.2), ([1.5, 0.5], 0.2)],
        &[([1.0, 0.75], 0.1)],
        &[([0.6, 0.6], 0.15), ([1.4, 0.6], 0.15), ([0.6, 1.4], 0.15), ([1.4, 1.4], 0.15)],
        &[([1.5, 1.0], 0.5)],
        &[([0.5, 0.5], 0.08), ([2.5, 1.5], 0.25)],
    ];
    let dims = [(2.0, 2.0, 0.3), (2.0, 1.0, 0.25), (2.0, 1.5, 0.2), (2.0, 2.0, 0.25), (3.0, 2.0, 0.4), (3.0, 2.0, 0.3)];
    for (i, (holes, (w, d, h))) in plates.iter().zip(dims).enumerate() {
        v.push(extrusion_fixture(&format!("plate-{i:02}"), &plate_with_holes(w, d, h, holes), &o));
    }
    v
}

/// Closed torus grid mesh with `2·nu·nv` triangles (no BRep).
pub fn torus_mesh(major: f64, minor: f64, nu: usize, nv: usize) -> ScanMesh {
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let rho = major + minor * v.cos();
            positions.push(Vec3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % nu) * nv + j % nv) as u32;
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    ScanMesh::new(positions, triangles)
}

/// A fine cylinder whose low-resolution mesh has roughly `target` triangles.
pub fn throughput_cylinder(target: usize) -> Fixture {
    // side quads n·nz·2 plus caps 2(n − 2) with nz ≈ n/(2π): ≈ n²/π triangles
    let n = ((target as f64 * std::f64::consts::PI).sqrt()).round().max(8.0);
    let edge_len = TAU / n;
    extrusion_fixture("throughput-cylinder", &cylinder(1.0, 1.0), &TessOptions { edge_len, max_angle: TAU / n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts_and_euler() {
        let f = unit_cube();
        let c = &f.brep;
        assert_eq!((c.faces.len(), c.coedges.len(), c.corners.len(), c.loops.len()), (6, 24, 8, 6));
        assert_eq!(c.corners.len() + c.faces.len(), c.coedges.len() / 2 + 2);
        assert!((0..24).all(|e| !c.is_self_mated(e)));
        assert_eq!(f.mesh.n_triangles(), 12);
        assert_eq!(f.mesh.n_vertices(), 8);
        f.mesh.validate().unwrap();
        assert!((f.mesh.area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_normals_point_outward() {
        for f in suite() {
            let center = f.brep.bbox.center();
            let mut vol = 0.0;
            for t in 0..f.mesh.n_triangles() {
                let [a, b, c] = f.mesh.corners(t);
                vol += (a - center).dot(&(b - center).cross(&(c - center))) / 6.0;
            }
            assert!(vol > 0.0, "{} has inward orientation", f.name);
            f.mesh.validate().unwrap();
            assert_eq!(f.mesh.edges().len() * 2, f.mesh.n_triangles() * 3, "{} is not closed", f.name);
        }
    }

    #[test]
    fn areas_match_between_brep_and_mesh() {
        for f in suite() {
            let brep: f64 = f.brep.faces.iter().map(|x| x.area).sum();
            let rel = (brep - f.mesh.area()).abs() / brep;
            assert!(rel < 0.02, "{}: {brep} vs {}", f.name, f.mesh.area());
            let tf = f.mesh.triangle_faces.as_ref().unwrap();
            assert!(tf.iter().all(|&x| (x as usize) < f.brep.faces.len()));
        }
    }

    #[test]
    fn cylinder_topology() {
        let c = extrude_brep(&cylinder(1.0, 2.0), &TessOptions::default()).unwrap();
        assert_eq!((c.faces.len(), c.loops.len(), c.coedges.len(), c.corners.len()), (3, 4, 4, 0));
        assert!((c.faces[0].area - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(c.faces[2].surface_class, SurfaceClass::Cylinder);
    }

    #[test]
    fn hole_wall_faces_the_axis() {
        let c = extrude_brep(&plate_with_holes(2.0, 2.0, 0.5, &[([1.0, 1.0], 0.3)]), &TessOptions::default()).unwrap();
        let wall = c.faces.iter().find(|f| f.surface_class == SurfaceClass::Cylinder).unwrap();
        let n = wall.normal_near(&Vec3::new(1.3, 1.0, 0.25));
        assert!((n - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((c.faces[1].area - (4.0 - std::f64::consts::PI * 0.09)).abs() < 1e-12);
    }

    #[test]
    fn torus_grid_counts() {
        let m = torus_mesh(1.0, 0.3, 125, 95);
        assert_eq!((m.n_triangles(), m.n_vertices(), m.edges().len()), (23_750, 11_875, 35_625));
    }

    #[test]
    fn spline_block_validates() {
        let f = extrusion_fixture("spline", &spline_block(2.0, 1.0, 0.5, 0.1), &TessOptions::default());
        assert!(f.brep.coedges.iter().any(|e| e.curve_class == CurveClass::Bspline));
        f.mesh.validate().unwrap();
    }
}
