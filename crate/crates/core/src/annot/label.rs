//! Per-vertex annotation records and the junction sidecar file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::brep::{CurveClass, SurfaceClass};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    #[default]
    Face,
    Boundary,
    Junction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionInfo {
    pub corner_id: usize,
    /// Representative coedge of every physical edge meeting at the corner.
    pub edges: Vec<usize>,
    pub loops: Vec<usize>,
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub kind: LabelKind,
    pub edge_id: Option<usize>,
    pub loop_id: Option<usize>,
    pub mate_loop_id: Option<usize>,
    pub face_id_a: Option<usize>,
    pub face_id_b: Option<usize>,
    pub curve_class: Option<CurveClass>,
    /// Closest face by projection; set on every record.
    pub face_id: Option<usize>,
    pub surface_class: Option<SurfaceClass>,
    pub junction: Option<JunctionInfo>,
    pub soft_prob: f64,
    pub reserved_scalars: [f64; 4],
    /// Set when the SPH support was empty and a hard nearest neighbor was used.
    pub fallback: bool,
}

impl LabelRecord {
    pub fn is_boundary(&self) -> bool {
        self.kind != LabelKind::Face
    }

    pub fn is_junction(&self) -> bool {
        self.kind == LabelKind::Junction
    }
}

pub const SIDECAR_SCHEMA: &str = "a2z-labels/1";

/// Structured-text companion of a labeled PLY: junction adjacency keyed by
/// vertex index and the vertices that needed the nearest-neighbor fallback.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSidecar {
    pub schema: String,
    pub n_vertices: usize,
    pub junctions: BTreeMap<usize, JunctionInfo>,
    pub fallback_vertices: Vec<usize>,
}

impl LabelSidecar {
    pub fn from_labels(labels: &[LabelRecord]) -> Self {
        LabelSidecar {
            schema: SIDECAR_SCHEMA.to_string(),
            n_vertices: labels.len(),
            junctions: labels.iter().enumerate().filter_map(|(i, l)| l.junction.clone().map(|j| (i, j))).collect(),
            fallback_vertices: labels.iter().enumerate().filter(|(_, l)| l.fallback).map(|(i, _)| i).collect(),
        }
    }

    /// Restores the fields a PLY cannot carry.
    pub fn apply(&self, labels: &mut [LabelRecord]) -> Result<(), String> {
        if self.schema != SIDECAR_SCHEMA {
            return Err(format!("unexpected sidecar schema {:?}", self.schema));
        }
        if self.n_vertices != labels.len() {
            return Err(format!("sidecar covers {} vertices, mesh has {}", self.n_vertices, labels.len()));
        }
        for (&i, j) in &self.junctions {
            labels[i].junction = Some(j.clone());
        }
        for &i in &self.fallback_vertices {
            labels.get_mut(i).ok_or("fallback vertex out of range")?.fallback = true;
        }
        Ok(())
    }
}
