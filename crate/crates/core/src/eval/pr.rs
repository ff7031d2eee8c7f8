//! Point-level recall/precision for boundary and junction detection, and a
//! dihedral-angle baseline detector.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::mesh::ScanMesh;

use super::EvalError;

/// Predicted masks; the junction mask is kept inside the boundary mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub boundary: Vec<bool>,
    pub junction: Vec<bool>,
}

impl DetectionResult {
    /// Junction flags outside the boundary mask are cleared.
    pub fn new(boundary: Vec<bool>, junction: Vec<bool>) -> Result<Self, EvalError> {
        if boundary.len() != junction.len() {
            return Err(EvalError::LengthMismatch { expected: boundary.len(), got: junction.len() });
        }
        let junction = junction.iter().zip(&boundary).map(|(j, b)| *j && *b).collect();
        Ok(DetectionResult { boundary, junction })
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Ground-truth masks from labeled vertices.
    pub fn from_labels(m: &ScanMesh) -> Result<Self, EvalError> {
        let labels = m.labels.as_ref().ok_or(EvalError::MissingLabels)?;
        Ok(DetectionResult {
            boundary: labels.iter().map(|l| l.is_boundary()).collect(),
            junction: labels.iter().map(|l| l.is_junction()).collect(),
        })
    }
}

/// Binary confusion counts with recall and precision. Empty denominators
/// give 1: nothing to find is fully recalled, no prediction has no false alarm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pr {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub recall: f64,
    pub precision: f64,
}

impl Pr {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if a + b == 0 { 1.0 } else { a as f64 / (a + b) as f64 };
        Pr { tp, fp, fn_, recall: ratio(tp, fn_), precision: ratio(tp, fp) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrReport {
    pub boundary: Pr,
    pub junction: Pr,
}

/// Point matching rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrMode {
    #[default]
    Point,
    /// A prediction is correct if a ground-truth positive lies within the
    /// radius, and a positive is found if a prediction lies within it.
    Radius(f64),
}

fn counts(gt: &[bool], pred: &[bool], within: &[bool]) -> Pr {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for ((&g, &p), &w) in gt.iter().zip(pred).zip(within) {
        if !w {
            continue;
        }
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    Pr::from_counts(tp, fp, fn_)
}

/// Boundary metrics over all vertices; junction metrics over the vertices
/// predicted as boundary only.
pub fn pr_metrics(gt: &DetectionResult, pred: &DetectionResult) -> Result<PrReport, EvalError> {
    if gt.len() != pred.len() {
        return Err(EvalError::LengthMismatch { expected: gt.len(), got: pred.len() });
    }
    let all = vec![true; gt.len()];
    Ok(PrReport { boundary: counts(&gt.boundary, &pred.boundary, &all), junction: counts(&gt.junction, &pred.junction, &pred.boundary) })
}

/// Uniform hash grid over a subset of points.
struct Grid {
    cell: f64,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl Grid {
    fn new(points: &[Vec3], mask: &[bool], cell: f64) -> Self {
        let mut map: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate().filter(|(i, _)| mask[*i]) {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Grid { cell, map }
    }

    fn key(p: &Vec3, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    fn any_within(&self, points: &[Vec3], p: &Vec3, r: f64) -> bool {
        let k = Self::key(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.map.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if v.iter().any(|&j| (points[j] - p).norm() <= r) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn tolerant(points: &[Vec3], gt: &[bool], pred: &[bool], within: &[bool], r: f64) -> Pr {
    let gmask: Vec<bool> = gt.iter().zip(within).map(|(g, w)| *g && *w).collect();
    let pmask: Vec<bool> = pred.iter().zip(within).map(|(p, w)| *p && *w).collect();
    let (gg, pg) = (Grid::new(points, &gmask, r), Grid::new(points, &pmask, r));
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..points.len() {
        if pmask[i] {
            if gg.any_within(points, &points[i], r) {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        if gmask[i] && !pg.any_within(points, &points[i], r) {
            fn_ += 1;
        }
    }
    Pr::from_counts(tp, fp, fn_)
}

/// Metrics under either matching rule; `points` is required for `Radius`.
pub fn pr_metrics_with(gt: &DetectionResult, pred: &DetectionResult, points: &[Vec3], mode: PrMode) -> Result<PrReport, EvalError> {
    match mode {
        PrMode::Point => pr_metrics(gt, pred),
        PrMode::Radius(r) => {
            if gt.len() != pred.len() || points.len() != gt.len() {
                return Err(EvalError::LengthMismatch { expected: gt.len(), got: pred.len().min(points.len()) });
            }
            if !(r > 0.0) {
                return Err(EvalError::Config("tolerance radius must be positive".into()));
            }
            let all = vec![true; gt.len()];
            Ok(PrReport {
                boundary: tolerant(points, &gt.boundary, &pred.boundary, &all, r),
                junction: tolerant(points, &gt.junction, &pred.junction, &pred.boundary, r),
            })
        }
    }
}

/// Flags vertices on edges whose dihedral angle exceeds `threshold_deg`;
/// junctions need at least three such edges. Border and non-manifold edges
/// never count as sharp.
pub fn dihedral_baseline(m: &ScanMesh, threshold_deg: f64) -> DetectionResult {
    let normals: Vec<Vec3> = (0..m.n_triangles()).map(|t| m.triangle_normal(t)).collect();
    let cos_thr = threshold_deg.to_radians().cos();
    let mut sharp = vec![0u32; m.n_vertices()];
    for ((a, b), ts) in &m.edge_triangles() {
        if let [t0, t1] = ts[..] {
            let (n0, n1) = (normals[t0 as usize], normals[t1 as usize]);
            let denom = n0.norm() * n1.norm();
            if denom <= 0.0 {
                continue;
            }
            let c = (n0.dot(&n1) / denom).clamp(-1.0, 1.0);
            if threshold_deg < 180.0 && c < cos_thr {
                sharp[*a as usize] += 1;
                sharp[*b as usize] += 1;
            }
        }
    }
    DetectionResult { boundary: sharp.iter().map(|&s| s > 0).collect(), junction: sharp.iter().map(|&s| s >= 3).collect() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrRow {
    pub chunk: String,
    pub report: PrReport,
}

/// Chunk-wise table: one row per chunk plus the row mean.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrTable {
    pub rows: Vec<PrRow>,
}

impl PrTable {
    pub fn push(&mut self, chunk: impl Into<String>, report: PrReport) {
        self.rows.push(PrRow { chunk: chunk.into(), report });
    }

    /// Mean of recall and precision over rows: `[b_r, b_p, j_r, j_p]`.
    pub fn mean(&self) -> [f64; 4] {
        let n = self.rows.len().max(1) as f64;
        let mut m = [0.0; 4];
        for r in &self.rows {
            let v = [r.report.boundary.recall, r.report.boundary.precision, r.report.junction.recall, r.report.junction.precision];
            for k in 0..4 {
                m[k] += v[k];
            }
        }
        m.map(|x| x / n)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("chunk,boundary_recall,boundary_precision,junction_recall,junction_precision\n");
        let row = |s: &mut String, name: &str, v: [f64; 4]| {
            let _ = writeln!(s, "{name},{:.6},{:.6},{:.6},{:.6}", v[0], v[1], v[2], v[3]);
        };
        for r in &self.rows {
            let b = &r.report;
            row(&mut s, &r.chunk, [b.boundary.recall, b.boundary.precision, b.junction.recall, b.junction.precision]);
        }
        row(&mut s, "mean", self.mean());
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<24} {:>8} {:>8} {:>8} {:>8}\n", "chunk", "B-R", "B-P", "J-R", "J-P");
        let mut row = |name: &str, v: [f64; 4]| {
            let _ = writeln!(s, "{name:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", v[0], v[1], v[2], v[3]);
        };
        for r in &self.rows {
            let b = &r.report;
            row(&r.chunk, [b.boundary.recall, b.boundary.precision, b.junction.recall, b.junction.precision]);
        }
        row("mean", self.mean());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(b: &[bool]) -> DetectionResult {
        DetectionResult::new(b.to_vec(), vec![false; b.len()]).unwrap()
    }

    #[test]
    fn perfect_and_arithmetic() {
        let mut gt = vec![false; 30];
        for g in gt.iter_mut().take(10) {
            *g = true;
        }
        let r = pr_metrics(&det(&gt), &det(&gt)).unwrap();
        assert_eq!((r.boundary.recall, r.boundary.precision), (1.0, 1.0));
        let mut p = vec![false; 30];
        for (i, x) in p.iter_mut().enumerate() {
            *x = i < 7 || (20..23).contains(&i);
        }
        let r = pr_metrics(&det(&gt), &det(&p)).unwrap();
        assert_eq!((r.boundary.tp, r.boundary.fp, r.boundary.fn_), (7, 3, 3));
        assert!((r.boundary.recall - 0.7).abs() < 1e-15 && (r.boundary.precision - 0.7).abs() < 1e-15);
        let all = pr_metrics(&det(&gt), &det(&[true; 30])).unwrap();
        assert_eq!(all.boundary.recall, 1.0);
        assert!((all.boundary.precision - 10.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(pr_metrics(&det(&[true]), &det(&[true, false])), Err(EvalError::LengthMismatch { .. })));
        assert!(DetectionResult::new(vec![true], vec![]).is_err());
    }

    #[test]
    fn junction_is_conditional() {
        let gt = DetectionResult::new(vec![true, true, true, false], vec![true, true, false, false]).unwrap();
        // second junction is missed at the boundary stage and not charged to the junction task
        let pred = DetectionResult::new(vec![true, false, true, true], vec![true, true, false, true]).unwrap();
        assert_eq!(pred.junction, vec![true, false, false, true]);
        let r = pr_metrics(&gt, &pred).unwrap();
        assert_eq!((r.junction.tp, r.junction.fp, r.junction.fn_), (1, 1, 0));
        assert!(r.junction.tp <= r.boundary.tp);
    }

    #[test]
    fn radius_mode_tolerates_offsets() {
        let pts: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let gt = det(&[true, false, false, false]);
        let pred = det(&[false, true, false, false]);
        let strict = pr_metrics_with(&gt, &pred, &pts, PrMode::Point).unwrap();
        assert_eq!(strict.boundary.tp, 0);
        let loose = pr_metrics_with(&gt, &pred, &pts, PrMode::Radius(1.5)).unwrap();
        assert_eq!((loose.boundary.recall, loose.boundary.precision), (1.0, 1.0));
    }

    #[test]
    fn table_layout() {
        let mut t = PrTable::default();
        t.push("chunk-000", PrReport { boundary: Pr::from_counts(1, 1, 0), junction: Pr::from_counts(1, 0, 1) });
        let csv = t.to_csv();
        assert!(csv.starts_with("chunk,boundary_recall,boundary_precision,junction_recall,junction_precision\n"));
        assert!(csv.contains("chunk-000,1.000000,0.500000,0.500000,1.000000"));
        assert!(t.to_text().lines().count() == 3);
    }
}
