//! Boundary representation as a chain complex of corners, coedges, loops and faces.

mod curve;
mod sample;
mod schema;
mod surface;
mod walk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Vec3};

pub use curve::Curve;
pub use sample::{sample_brep, sample_edge_arclength, sample_face_uv, BrepSample, BrepSamples, SampleSource, SamplingConfig};
pub use schema::{BrepFile, CoEdgeRecord, CornerRecord, FaceRecord, LoopRecord, TessellationRecord, Transitions, SCHEMA_VERSION};
pub use surface::{Placement, Projection, Surface, Tessellation};
pub use walk::{Entity, Step};

#[derive(Debug, Error)]
pub enum BrepError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("walk error: {0}")]
    Walk(String),
    #[error("face {0} is degenerate (area below tolerance)")]
    DegenerateFace(usize),
    #[error("coedge {0} is degenerate (arc length below tolerance)")]
    DegenerateEdge(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveClass {
    Line,
    Circle,
    Ellipse,
    Bspline,
    Other,
}

impl CurveClass {
    pub const ALL: [CurveClass; 5] = [Self::Line, Self::Circle, Self::Ellipse, Self::Bspline, Self::Other];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Circle => "circle",
            Self::Ellipse => "ellipse",
            Self::Bspline => "bspline",
            Self::Other => "other",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceClass {
    Plane,
    Cylinder,
    Cone,
    Sphere,
    Torus,
    Bspline,
    Other,
}

impl SurfaceClass {
    pub const ALL: [SurfaceClass; 7] =
        [Self::Plane, Self::Cylinder, Self::Cone, Self::Sphere, Self::Torus, Self::Bspline, Self::Other];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Plane => "plane",
            Self::Cylinder => "cylinder",
            Self::Cone => "cone",
            Self::Sphere => "sphere",
            Self::Torus => "torus",
            Self::Bspline => "bspline",
            Self::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corner {
    pub id: usize,
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoEdge {
    pub id: usize,
    pub curve_class: CurveClass,
    pub curve_params: Vec<f64>,
    pub arc_length: f64,
    /// Start and end corner; empty for closed curves.
    pub endpoints: Vec<usize>,
    pub polyline: Vec<Vec3>,
    pub curve: Curve,
}

impl CoEdge {
    pub fn is_closed(&self) -> bool {
        self.endpoints.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub id: usize,
    pub surface_class: SurfaceClass,
    pub surface_params: Vec<f64>,
    pub area: f64,
    /// First loop is the outer boundary.
    pub loop_ids: Vec<usize>,
    pub reversed: bool,
    pub uv_domain: [f64; 4],
    pub surface: Surface,
}

impl Face {
    /// Outward unit normal of the face at the projection of `p`.
    pub fn normal_near(&self, p: &Vec3) -> Vec3 {
        let n = match &self.surface {
            Surface::Mesh(t) => {
                let pr = self.surface.project(p, None);
                t.vertex_normals()[pr.uv[0] as usize]
            }
            s => {
                let pr = s.project(p, Some(self.uv_domain));
                s.normal(pr.uv[0], pr.uv[1])
            }
        };
        if self.reversed {
            -n
        } else {
            n
        }
    }

    /// Distance from `p` to the face surface restricted to its uv box.
    pub fn projection_distance(&self, p: &Vec3) -> f64 {
        self.surface.project(p, Some(self.uv_domain)).distance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    pub id: usize,
    pub coedge_ids: Vec<usize>,
    pub perimeter: f64,
    pub face: usize,
    pub centroid: Vec3,
    pub normal: Vec3,
}

/// Row-compressed boolean matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseBool {
    pub n_cols: usize,
    pub rows: Vec<Vec<usize>>,
}

impl SparseBool {
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows.get(r).is_some_and(|row| row.contains(&c))
    }

    /// Rows that contain column `c`.
    pub fn rows_with(&self, c: usize) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row.contains(&c))
            .map(|(r, _)| r)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ChainComplex {
    pub corners: Vec<Corner>,
    pub coedges: Vec<CoEdge>,
    pub faces: Vec<Face>,
    pub loops: Vec<Loop>,
    pub next: Vec<usize>,
    pub parent: Vec<usize>,
    pub mate: Vec<usize>,
    /// coedge × corner
    pub ev: SparseBool,
    /// face × coedge
    pub fe: SparseBool,
    pub bbox: Aabb,
    pub tol_geo: f64,
}

impl ChainComplex {
    pub fn diagonal(&self) -> f64 {
        self.bbox.diagonal()
    }

    pub fn tol_area(&self) -> f64 {
        self.tol_geo * self.tol_geo
    }

    pub fn owner_face(&self, e: usize) -> usize {
        self.loops[self.parent[e]].face
    }

    pub fn is_self_mated(&self, e: usize) -> bool {
        self.mate[e] == e
    }

    /// The two faces incident to the physical edge of `e` (equal when self-mated).
    pub fn incident_faces(&self, e: usize) -> (usize, usize) {
        (self.owner_face(e), self.owner_face(self.mate[e]))
    }

    /// One representative coedge per physical edge: the smaller id of each mate pair.
    pub fn physical_edges(&self) -> Vec<usize> {
        (0..self.coedges.len()).filter(|&e| e <= self.mate[e]).collect()
    }

    pub fn physical_edge_of(&self, e: usize) -> usize {
        e.min(self.mate[e])
    }

    /// Coedges having corner `v` as an endpoint.
    pub fn coedges_at_corner(&self, v: usize) -> Vec<usize> {
        self.ev.rows_with(v)
    }

    pub fn loop_polyline(&self, l: usize) -> Vec<Vec3> {
        let mut pts = Vec::new();
        for &e in &self.loops[l].coedge_ids {
            let pl = &self.coedges[e].polyline;
            let skip = usize::from(!pts.is_empty());
            pts.extend(pl.iter().skip(skip).copied());
        }
        if pts.len() > 2 && (pts[0] - pts[pts.len() - 1]).norm() <= self.tol_geo {
            pts.pop();
        }
        pts
    }

    /// Faces touching the entity that produced a sample.
    pub fn faces_of(&self, source: SampleSource, id: usize) -> Vec<usize> {
        let mut fs = match source {
            SampleSource::Face => vec![id],
            SampleSource::Edge => {
                let (a, b) = self.incident_faces(id);
                vec![a, b]
            }
            SampleSource::Corner => self.coedges_at_corner(id).into_iter().map(|e| self.owner_face(e)).collect(),
        };
        fs.sort_unstable();
        fs.dedup();
        fs
    }

    pub fn from_json_str(s: &str) -> Result<Self, BrepError> {
        let rec: BrepFile = serde_json::from_str(s).map_err(|e| BrepError::Schema(e.to_string()))?;
        rec.into_complex()
    }

    /// Reads and validates an interchange file.
    pub fn parse_file(path: impl AsRef<std::path::Path>) -> Result<Self, BrepError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_record(&self) -> BrepFile {
        BrepFile::from_complex(self)
    }
}

/// Parses and validates a BRep interchange file.
pub fn parse_brep(path: impl AsRef<std::path::Path>) -> Result<ChainComplex, BrepError> {
    ChainComplex::parse_file(path)
}

pub use walk::topo_walk;
