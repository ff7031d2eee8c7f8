//! The `a2z-brep/1` interchange schema and its validation into a [`ChainComplex`].

use serde::{Deserialize, Serialize};

use crate::geom::{arr, newell_normal, polyline_centroid, v3, Aabb, Vec3};

use super::surface::{default_domain, Placement, Surface, Tessellation};
use super::{BrepError, ChainComplex, CoEdge, Corner, Curve, CurveClass, Face, Loop, SparseBool, SurfaceClass};

pub const SCHEMA_VERSION: &str = "a2z-brep/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrepFile {
    pub schema: String,
    pub corners: Vec<CornerRecord>,
    pub coedges: Vec<CoEdgeRecord>,
    pub faces: Vec<FaceRecord>,
    pub loops: Vec<LoopRecord>,
    pub transitions: Transitions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerRecord {
    pub id: usize,
    pub position: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoEdgeRecord {
    pub id: usize,
    pub curve_class: CurveClass,
    #[serde(default)]
    pub curve_params: Vec<f64>,
    pub arc_length: f64,
    #[serde(default)]
    pub endpoints: Vec<usize>,
    pub polyline: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceRecord {
    pub id: usize,
    pub surface_class: SurfaceClass,
    #[serde(default)]
    pub surface_params: Vec<f64>,
    pub area: f64,
    pub loop_ids: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uv_domain: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tessellation: Option<TessellationRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TessellationRecord {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopRecord {
    pub id: usize,
    pub face: usize,
    pub coedge_ids: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transitions {
    pub next: Vec<usize>,
    pub parent: Vec<usize>,
    pub mate: Vec<usize>,
}

fn schema<T>(msg: String) -> Result<T, BrepError> {
    Err(BrepError::Schema(msg))
}

fn topology<T>(msg: String) -> Result<T, BrepError> {
    Err(BrepError::Topology(msg))
}

fn check_dense(kind: &str, ids: impl Iterator<Item = usize>) -> Result<(), BrepError> {
    for (i, id) in ids.enumerate() {
        if id != i {
            return schema(format!("{kind}[{i}] has id {id}; ids must be dense and 0-based"));
        }
    }
    Ok(())
}

fn expect_len(what: &str, id: usize, params: &[f64], n: usize) -> Result<(), BrepError> {
    if params.len() != n {
        return schema(format!("{what} {id}: expected {n} parameters, found {}", params.len()));
    }
    if params.iter().any(|x| !x.is_finite()) {
        return schema(format!("{what} {id}: non-finite parameter"));
    }
    Ok(())
}

fn placement(p: &[f64]) -> Result<Placement, String> {
    let origin = Vec3::new(p[0], p[1], p[2]);
    let axis = Vec3::new(p[3], p[4], p[5]);
    let xdir = Vec3::new(p[6], p[7], p[8]);
    if axis.norm() < 1e-12 || (xdir - axis * xdir.dot(&axis) / axis.norm_squared()).norm() < 1e-12 {
        return Err("degenerate axis / reference direction".into());
    }
    Ok(Placement::new(origin, axis, xdir))
}

fn build_surface(f: &FaceRecord) -> Result<Surface, BrepError> {
    let p = &f.surface_params;
    let mk = |n: usize| expect_len("face", f.id, p, n);
    let wrap = |r: Result<Placement, String>| r.map_err(|m| BrepError::Schema(format!("face {}: {m}", f.id)));
    let positive = |x: f64, what: &str| {
        if x > 0.0 {
            Ok(x)
        } else {
            schema(format!("face {}: {what} must be positive", f.id))
        }
    };
    let s = match f.surface_class {
        SurfaceClass::Plane => {
            mk(9)?;
            Surface::Plane(wrap(placement(p))?)
        }
        SurfaceClass::Cylinder => {
            mk(10)?;
            Surface::Cylinder { at: wrap(placement(p))?, radius: positive(p[9], "radius")? }
        }
        SurfaceClass::Cone => {
            mk(11)?;
            if !(p[10].abs() < std::f64::consts::FRAC_PI_2) {
                return schema(format!("face {}: cone half angle out of range", f.id));
            }
            Surface::Cone { at: wrap(placement(p))?, radius: p[9], half_angle: p[10] }
        }
        SurfaceClass::Sphere => {
            mk(10)?;
            Surface::Sphere { at: wrap(placement(p))?, radius: positive(p[9], "radius")? }
        }
        SurfaceClass::Torus => {
            mk(11)?;
            Surface::Torus { at: wrap(placement(p))?, major: positive(p[9], "major radius")?, minor: positive(p[10], "minor radius")? }
        }
        SurfaceClass::Bspline | SurfaceClass::Other => {
            let Some(t) = &f.tessellation else {
                return schema(format!("face {}: {} surfaces require a tessellation", f.id, f.surface_class.name()));
            };
            if t.triangles.is_empty() || t.triangles.iter().flatten().any(|&i| i >= t.vertices.len()) {
                return schema(format!("face {}: malformed tessellation", f.id));
            }
            Surface::Mesh(Tessellation {
                vertices: t.vertices.iter().map(|&a| v3(a)).collect(),
                triangles: t.triangles.clone(),
            })
        }
    };
    Ok(s)
}

fn build_curve(e: &CoEdgeRecord, polyline: &[Vec3]) -> Result<Curve, BrepError> {
    let p = &e.curve_params;
    Ok(match e.curve_class {
        CurveClass::Line if !p.is_empty() => {
            expect_len("coedge", e.id, p, 6)?;
            Curve::Line { start: Vec3::new(p[0], p[1], p[2]), end: Vec3::new(p[3], p[4], p[5]) }
        }
        CurveClass::Circle if !p.is_empty() => {
            expect_len("coedge", e.id, p, 12)?;
            let at = placement(p).map_err(|m| BrepError::Schema(format!("coedge {}: {m}", e.id)))?;
            if p[9] <= 0.0 || p[10] == p[11] {
                return schema(format!("coedge {}: degenerate circle parameters", e.id));
            }
            Curve::Circle { at, radius: p[9], a0: p[10], a1: p[11] }
        }
        _ => Curve::polyline(polyline.to_vec()),
    })
}

/// uv box covering a face's loops when the file does not provide one.
fn derive_domain(surface: &Surface, loop_points: &[Vec3]) -> [f64; 4] {
    match surface {
        Surface::Plane(_) | Surface::Cylinder { .. } | Surface::Cone { .. } => {
            let mut d = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
            for p in loop_points {
                let uv = surface.project(p, None).uv;
                d[0] = d[0].min(uv[0]);
                d[1] = d[1].max(uv[0]);
                d[2] = d[2].min(uv[1]);
                d[3] = d[3].max(uv[1]);
            }
            if !matches!(surface, Surface::Plane(_)) {
                d[0] = 0.0;
                d[1] = std::f64::consts::TAU;
            }
            d
        }
        _ => default_domain(surface),
    }
}

impl BrepFile {
    /// Validates every invariant of the chain complex; violations are errors.
    pub fn into_complex(self) -> Result<ChainComplex, BrepError> {
        if self.schema != SCHEMA_VERSION {
            return schema(format!("unsupported schema {:?}, expected {SCHEMA_VERSION:?}", self.schema));
        }
        let (nv, ne, nf, nl) = (self.corners.len(), self.coedges.len(), self.faces.len(), self.loops.len());
        if ne > 0 && (nf == 0 || nl == 0) {
            return schema("coedges reference loops/faces but none are defined".into());
        }
        check_dense("corners", self.corners.iter().map(|c| c.id))?;
        check_dense("coedges", self.coedges.iter().map(|c| c.id))?;
        check_dense("faces", self.faces.iter().map(|c| c.id))?;
        check_dense("loops", self.loops.iter().map(|c| c.id))?;
        let Transitions { next, parent, mate } = self.transitions;
        for (name, v) in [("next", &next), ("parent", &parent), ("mate", &mate)] {
            if v.len() != ne {
                return schema(format!("transition {name} has length {}, expected {ne}", v.len()));
            }
        }
        if let Some(e) = next.iter().chain(&mate).find(|&&e| e >= ne) {
            return schema(format!("transition references coedge {e} out of range"));
        }
        if let Some(l) = parent.iter().find(|&&l| l >= nl) {
            return schema(format!("parent references loop {l} out of range"));
        }

        let corners: Vec<Corner> = self
            .corners
            .iter()
            .map(|c| {
                if c.position.iter().all(|x| x.is_finite()) {
                    Ok(Corner { id: c.id, position: v3(c.position) })
                } else {
                    schema(format!("corner {}: non-finite position", c.id))
                }
            })
            .collect::<Result<_, _>>()?;

        for e in &self.coedges {
            if !(e.arc_length > 0.0 && e.arc_length.is_finite()) {
                return schema(format!("coedge {}: arc_length must be positive", e.id));
            }
            if e.endpoints.len() > 2 || e.endpoints.iter().any(|&v| v >= nv) {
                return schema(format!("coedge {}: invalid endpoints {:?}", e.id, e.endpoints));
            }
            if e.polyline.len() < 2 || e.polyline.iter().flatten().any(|x| !x.is_finite()) {
                return schema(format!("coedge {}: polyline needs at least 2 finite points", e.id));
            }
        }
        for f in &self.faces {
            if !(f.area > 0.0 && f.area.is_finite()) {
                return schema(format!("face {}: area must be positive", f.id));
            }
            if f.loop_ids.is_empty() || f.loop_ids.iter().any(|&l| l >= nl) {
                return schema(format!("face {}: invalid loop ids {:?}", f.id, f.loop_ids));
            }
        }
        for l in &self.loops {
            if l.face >= nf {
                return schema(format!("loop {}: face {} out of range", l.id, l.face));
            }
            if l.coedge_ids.is_empty() || l.coedge_ids.iter().any(|&e| e >= ne) {
                return schema(format!("loop {}: invalid coedge ids", l.id));
            }
        }

        // topology
        let mut seen = vec![false; ne];
        for &e in &next {
            if std::mem::replace(&mut seen[e], true) {
                return topology(format!("next is not a permutation (coedge {e} reached twice)"));
            }
        }
        let mut owner = vec![usize::MAX; ne];
        for l in &self.loops {
            for &e in &l.coedge_ids {
                if owner[e] != usize::MAX {
                    return topology(format!("coedge {e} belongs to loops {} and {}", owner[e], l.id));
                }
                owner[e] = l.id;
            }
            let n = l.coedge_ids.len();
            for i in 0..n {
                let (a, b) = (l.coedge_ids[i], l.coedge_ids[(i + 1) % n]);
                if next[a] != b {
                    return topology(format!("loop {}: next[{a}] = {} but the loop continues with {b}", l.id, next[a]));
                }
            }
            if !self.faces[l.face].loop_ids.contains(&l.id) {
                return topology(format!("loop {} claims face {} which does not list it", l.id, l.face));
            }
        }
        for f in &self.faces {
            for &l in &f.loop_ids {
                if self.loops[l].face != f.id {
                    return topology(format!("face {} lists loop {l} owned by face {}", f.id, self.loops[l].face));
                }
            }
        }
        for e in 0..ne {
            if owner[e] == usize::MAX {
                return topology(format!("coedge {e} is not in any loop"));
            }
            if parent[e] != owner[e] {
                return topology(format!("parent[{e}] = {} but coedge lies in loop {}", parent[e], owner[e]));
            }
            let m = mate[e];
            if mate[m] != e {
                return topology(format!("mate involution broken: mate[{e}] = {m}, mate[{m}] = {}", mate[m]));
            }
            if m != e {
                let (a, b) = (&self.coedges[e].endpoints, &self.coedges[m].endpoints);
                let rev: Vec<usize> = b.iter().rev().copied().collect();
                if a.len() != b.len() || (a.len() == 2 && *a != rev) || (a.len() == 1 && a != b) {
                    return topology(format!("mated coedges {e} and {m} do not share reversed endpoints"));
                }
            }
            let (cur, nx) = (&self.coedges[e].endpoints, &self.coedges[next[e]].endpoints);
            if let (Some(end), Some(start)) = (cur.last(), nx.first()) {
                if end != start {
                    return topology(format!("coedge {e} ends at corner {end} but next[{e}] starts at {start}"));
                }
            }
        }

        // geometry
        let mut bbox = Aabb::from_points(&corners.iter().map(|c| c.position).collect::<Vec<_>>());
        let polylines: Vec<Vec<Vec3>> =
            self.coedges.iter().map(|e| e.polyline.iter().map(|&p| v3(p)).collect()).collect();
        for pl in &polylines {
            for p in pl {
                bbox.extend(p);
            }
        }
        let diag = bbox.diagonal();
        let tol_geo = 1e-6 * if diag > 0.0 { diag } else { 1.0 };
        let mut coedges = Vec::with_capacity(ne);
        for (rec, pl) in self.coedges.iter().zip(polylines) {
            let (first, last) = (pl[0], pl[pl.len() - 1]);
            let ends = match rec.endpoints.as_slice() {
                [a, b] => Some((*a, *b)),
                [a] => Some((*a, *a)),
                _ => None,
            };
            if let Some((a, b)) = ends {
                let (da, db) = ((first - corners[a].position).norm(), (last - corners[b].position).norm());
                if da > tol_geo || db > tol_geo {
                    return Err(BrepError::Geometry(format!(
                        "coedge {}: polyline endpoints miss corners by {:.3e} / {:.3e} (tol {tol_geo:.3e})",
                        rec.id, da, db
                    )));
                }
            }
            let chord = (last - first).norm();
            if chord > rec.arc_length + tol_geo {
                return Err(BrepError::Geometry(format!(
                    "coedge {}: chord {chord} exceeds arc length {}",
                    rec.id, rec.arc_length
                )));
            }
            let curve = build_curve(rec, &pl)?;
            coedges.push(CoEdge {
                id: rec.id,
                curve_class: rec.curve_class,
                curve_params: rec.curve_params.clone(),
                arc_length: rec.arc_length,
                endpoints: rec.endpoints.clone(),
                polyline: pl,
                curve,
            });
        }

        let mut faces = Vec::with_capacity(nf);
        for f in &self.faces {
            let surface = build_surface(f)?;
            let uv_domain = match f.uv_domain {
                Some(d) if d[1] >= d[0] && d[3] >= d[2] => d,
                Some(_) => return schema(format!("face {}: inverted uv domain", f.id)),
                None => {
                    let pts: Vec<Vec3> =
                        f.loop_ids.iter().flat_map(|&l| self.loops[l].coedge_ids.iter()).flat_map(|&e| coedges[e].polyline.clone()).collect();
                    derive_domain(&surface, &pts)
                }
            };
            faces.push(Face {
                id: f.id,
                surface_class: f.surface_class,
                surface_params: f.surface_params.clone(),
                area: f.area,
                loop_ids: f.loop_ids.clone(),
                reversed: f.reversed,
                uv_domain,
                surface,
            });
        }

        let mut complex = ChainComplex {
            corners,
            coedges,
            faces,
            loops: Vec::new(),
            next,
            parent,
            mate,
            ev: SparseBool::default(),
            fe: SparseBool::default(),
            bbox,
            tol_geo,
        };
        let loops = self
            .loops
            .iter()
            .map(|l| {
                let perimeter: f64 = l.coedge_ids.iter().map(|&e| complex.coedges[e].arc_length).sum();
                complex.loops.push(Loop {
                    id: l.id,
                    coedge_ids: l.coedge_ids.clone(),
                    perimeter,
                    face: l.face,
                    centroid: Vec3::zeros(),
                    normal: Vec3::z(),
                });
                let pts = complex.loop_polyline(l.id);
                let centroid = polyline_centroid(&pts);
                let normal = newell_normal(&pts).unwrap_or_else(|| complex.faces[l.face].normal_near(&centroid));
                Loop { id: l.id, coedge_ids: l.coedge_ids.clone(), perimeter, face: l.face, centroid, normal }
            })
            .collect();
        complex.loops = loops;
        complex.ev = SparseBool {
            n_cols: nv,
            rows: complex
                .coedges
                .iter()
                .map(|e| {
                    let mut r = e.endpoints.clone();
                    r.sort_unstable();
                    r.dedup();
                    r
                })
                .collect(),
        };
        complex.fe = SparseBool {
            n_cols: ne,
            rows: complex
                .faces
                .iter()
                .map(|f| {
                    let mut r: Vec<usize> = f.loop_ids.iter().flat_map(|&l| complex.loops[l].coedge_ids.clone()).collect();
                    r.sort_unstable();
                    r
                })
                .collect(),
        };
        Ok(complex)
    }

    pub fn from_complex(c: &ChainComplex) -> Self {
        BrepFile {
            schema: SCHEMA_VERSION.to_string(),
            corners: c.corners.iter().map(|k| CornerRecord { id: k.id, position: arr(&k.position) }).collect(),
            coedges: c
                .coedges
                .iter()
                .map(|e| CoEdgeRecord {
                    id: e.id,
                    curve_class: e.curve_class,
                    curve_params: e.curve_params.clone(),
                    arc_length: e.arc_length,
                    endpoints: e.endpoints.clone(),
                    polyline: e.polyline.iter().map(arr).collect(),
                })
                .collect(),
            faces: c
                .faces
                .iter()
                .map(|f| FaceRecord {
                    id: f.id,
                    surface_class: f.surface_class,
                    surface_params: f.surface_params.clone(),
                    area: f.area,
                    loop_ids: f.loop_ids.clone(),
                    reversed: f.reversed,
                    uv_domain: Some(f.uv_domain),
                    tessellation: match &f.surface {
                        Surface::Mesh(t) => Some(TessellationRecord {
                            vertices: t.vertices.iter().map(arr).collect(),
                            triangles: t.triangles.clone(),
                        }),
                        _ => None,
                    },
                })
                .collect(),
            loops: c.loops.iter().map(|l| LoopRecord { id: l.id, face: l.face, coedge_ids: l.coedge_ids.clone() }).collect(),
            transitions: Transitions { next: c.next.clone(), parent: c.parent.clone(), mate: c.mate.clone() },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("brep record serializes")
    }
}
