//! Triangle meshes, flat midpoint subdivision and mesh file I/O.

mod io;

use std::collections::HashMap;

use thiserror::Error;

use crate::annot::LabelRecord;
use crate::geom::{triangle_area, Aabb, Vec3};

pub use io::{read_mesh, read_obj, read_ply, read_samples_ply, write_ply, write_points_ply, write_samples_ply, PlyFormat};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(u32, u32),
    #[error("triangle {0} references a vertex out of range")]
    IndexOutOfRange(usize),
    #[error("mesh format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Unit vertex normals; empty until computed.
    pub normals: Vec<Vec3>,
    /// Owning BRep face per triangle, when known.
    pub triangle_faces: Option<Vec<u32>>,
    pub labels: Option<Vec<LabelRecord>>,
}

impl ScanMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let mut m = ScanMesh { positions, triangles, ..Default::default() };
        m.compute_normals();
        m
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.positions.len() as u32;
        match self.triangles.iter().position(|t| t.iter().any(|&i| i >= n)) {
            Some(i) => Err(MeshError::IndexOutOfRange(i)),
            None => Ok(()),
        }
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(&self.positions)
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.positions[i as usize])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(&a, &b, &c)
    }

    /// Unnormalized triangle normal (length is twice the area).
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted vertex normals; isolated or degenerate vertices get +z.
    pub fn compute_normals(&mut self) {
        let mut acc = vec![Vec3::zeros(); self.positions.len()];
        for t in 0..self.triangles.len() {
            let n = self.triangle_normal(t);
            for &i in &self.triangles[t] {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::z()
                }
            })
            .collect();
    }

    /// Unique undirected edges as `(min, max)` vertex pairs, in first-seen order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut seen = HashMap::with_capacity(self.triangles.len() * 2);
        let mut out = Vec::new();
        for t in &self.triangles {
            for k in 0..3 {
                let key = edge_key(t[k], t[(k + 1) % 3]);
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Map from undirected edge to the triangles that use it.
    pub fn edge_triangles(&self) -> HashMap<(u32, u32), Vec<u32>> {
        let mut map: HashMap<(u32, u32), Vec<u32>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(t[k], t[(k + 1) % 3])).or_default().push(ti as u32);
            }
        }
        map
    }

    /// Triangle adjacency through shared edges.
    pub fn triangle_neighbors(&self) -> Vec<Vec<u32>> {
        let mut nb = vec![Vec::new(); self.triangles.len()];
        for tris in self.edge_triangles().values() {
            for &a in tris {
                for &b in tris {
                    if a != b {
                        nb[a as usize].push(b);
                    }
                }
            }
        }
        for v in &mut nb {
            v.sort_unstable();
            v.dedup();
        }
        nb
    }

    /// Drops the masked triangles and compacts away unreferenced vertices.
    /// Returns the old-to-new vertex map (`None` for dropped vertices).
    pub fn remove_triangles(&mut self, remove: &[bool]) -> Vec<Option<u32>> {
        assert_eq!(remove.len(), self.triangles.len());
        let keep: Vec<usize> = (0..self.triangles.len()).filter(|&t| !remove[t]).collect();
        let mut used = vec![false; self.positions.len()];
        for &t in &keep {
            for &i in &self.triangles[t] {
                used[i as usize] = true;
            }
        }
        let mut map = vec![None; self.positions.len()];
        let mut next = 0u32;
        for (i, u) in used.iter().enumerate() {
            if *u {
                map[i] = Some(next);
                next += 1;
            }
        }
        let compact = |v: &Vec<Vec3>| -> Vec<Vec3> { v.iter().zip(&used).filter(|(_, u)| **u).map(|(p, _)| *p).collect() };
        self.positions = compact(&self.positions);
        if !self.normals.is_empty() {
            self.normals = compact(&self.normals);
        }
        self.triangles = keep.iter().map(|&t| self.triangles[t].map(|i| map[i as usize].expect("kept vertex"))).collect();
        if let Some(tf) = &mut self.triangle_faces {
            *tf = keep.iter().map(|&t| tf[t]).collect();
        }
        if let Some(labels) = &mut self.labels {
            *labels = labels.iter().zip(&used).filter(|(_, u)| **u).map(|(l, _)| l.clone()).collect();
        }
        map
    }
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One round of flat 1-to-4 midpoint subdivision with shared midpoints.
fn subdivide_once(m: &ScanMesh) -> Result<ScanMesh, MeshError> {
    let mut positions = m.positions.clone();
    let mut mids: HashMap<(u32, u32), (u32, u8)> = HashMap::with_capacity(m.triangles.len() * 2);
    let mut tri_mids = Vec::with_capacity(m.triangles.len());
    for t in &m.triangles {
        let mut ids = [0u32; 3];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = edge_key(a, b);
            let entry = mids.entry(key).or_insert_with(|| {
                positions.push((m.positions[a as usize] + m.positions[b as usize]) * 0.5);
                ((positions.len() - 1) as u32, 0)
            });
            entry.1 += 1;
            if entry.1 > 2 {
                return Err(MeshError::NonManifold(key.0, key.1));
            }
            ids[k] = entry.0;
        }
        tri_mids.push(ids);
    }
    let mut triangles = Vec::with_capacity(m.triangles.len() * 4);
    for (t, [m01, m12, m20]) in m.triangles.iter().zip(&tri_mids) {
        let [a, b, c] = *t;
        triangles.push([a, *m01, *m20]);
        triangles.push([*m01, b, *m12]);
        triangles.push([*m20, *m12, c]);
        triangles.push([*m01, *m12, *m20]);
    }
    let triangle_faces = m.triangle_faces.as_ref().map(|tf| tf.iter().flat_map(|&f| [f; 4]).collect());
    Ok(ScanMesh { positions, triangles, normals: Vec::new(), triangle_faces, labels: None })
}

/// Flat midpoint subdivision: every triangle splits into four, geometry is unchanged.
/// Labels are dropped because vertex identities change.
pub fn upsample_mesh(m: &ScanMesh, iterations: u32) -> Result<ScanMesh, MeshError> {
    m.validate()?;
    if iterations == 0 {
        return Ok(m.clone());
    }
    let mut cur = subdivide_once(m)?;
    for _ in 1..iterations {
        cur = subdivide_once(&cur)?;
    }
    cur.compute_normals();
    Ok(cur)
}
