//! Empirical semivariogram of a scalar field over a point cloud.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brep::ChainComplex;
use crate::geom::{polyline_distance, Aabb, Vec3};
use crate::mesh::ScanMesh;
use crate::par::Exec;
use crate::rng;

use super::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemivariogramConfig {
    /// Equal-width bins over normalized lag `[0, 1]`.
    pub bins: usize,
    /// Largest cloud evaluated exactly over all pairs; also the subsample size.
    pub pair_cap: usize,
    /// Random centroids pooled in subsample mode.
    pub centroids: usize,
}

impl Default for SemivariogramConfig {
    fn default() -> Self {
        SemivariogramConfig { bins: 20, pair_cap: 2000, centroids: 8 }
    }
}

/// Non-empty bins only; `gamma[k]` belongs to `bin_centers[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemivariogramReport {
    pub bin_centers: Vec<f64>,
    pub gamma: Vec<f64>,
    pub counts: Vec<u64>,
    pub centroid_seed: u64,
    /// Zero when every pair was used.
    pub centroids: usize,
    pub n_points: usize,
    pub diagonal: f64,
}

#[derive(Clone)]
struct Acc {
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl Acc {
    fn new(bins: usize) -> Self {
        Acc { sum: vec![0.0; bins], count: vec![0; bins] }
    }
}

/// All pairs `i < j` of `idx` in lexicographic order; summation order is fixed.
fn accumulate(points: &[Vec3], field: &[f64], idx: &[usize], diag: f64, acc: &mut Acc) {
    let bins = acc.sum.len();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let h = (points[i] - points[j]).norm() / diag;
            let k = ((h * bins as f64) as usize).min(bins - 1);
            let d = field[i] - field[j];
            acc.sum[k] += d * d;
            acc.count[k] += 1;
        }
    }
}

/// `γ(h) = Σ (z_i − z_j)² / (2 |N(h)|)` with lags divided by the bounding-box
/// diagonal. Clouds above `pair_cap` pool the `pair_cap` nearest neighbors of
/// `centroids` random points.
pub fn semivariogram(points: &[Vec3], field: &[f64], cfg: &SemivariogramConfig, seed: u64, exec: Exec) -> Result<SemivariogramReport, EvalError> {
    if points.len() != field.len() {
        return Err(EvalError::LengthMismatch { expected: points.len(), got: field.len() });
    }
    if points.len() < 2 {
        return Err(EvalError::InsufficientPoints(points.len()));
    }
    if cfg.bins == 0 || cfg.pair_cap < 2 || cfg.centroids == 0 {
        return Err(EvalError::Config("semivariogram needs bins ≥ 1, pair_cap ≥ 2, centroids ≥ 1".into()));
    }
    if field.iter().chain(points.iter().flat_map(|p| p.iter())).any(|x| !x.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let diag = Aabb::from_points(points).diagonal();
    if diag <= 0.0 {
        return Err(EvalError::InsufficientPoints(1));
    }
    let n = points.len();
    let centroid_seed = rng::mix(seed, rng::hash_str("semivariogram"));
    let (acc, centroids) = if n <= cfg.pair_cap {
        let mut acc = Acc::new(cfg.bins);
        accumulate(points, field, &(0..n).collect::<Vec<_>>(), diag, &mut acc);
        (acc, 0)
    } else {
        let mut r = rng::stream(centroid_seed, 0);
        let picks: Vec<usize> = (0..cfg.centroids).map(|_| r.random_range(0..n)).collect();
        let parts = exec.map(&picks, |&c| {
            let mut idx: Vec<usize> = (0..n).collect();
            let key = |i: &usize| ((points[*i] - points[c]).norm_squared(), *i);
            idx.select_nth_unstable_by(cfg.pair_cap - 1, |a, b| key(a).partial_cmp(&key(b)).unwrap());
            idx.truncate(cfg.pair_cap);
            idx.sort_unstable();
            let mut acc = Acc::new(cfg.bins);
            accumulate(points, field, &idx, diag, &mut acc);
            acc
        });
        let mut acc = Acc::new(cfg.bins);
        for p in parts {
            for k in 0..cfg.bins {
                acc.sum[k] += p.sum[k];
                acc.count[k] += p.count[k];
            }
        }
        (acc, cfg.centroids)
    };
    let mut rep = SemivariogramReport { bin_centers: vec![], gamma: vec![], counts: vec![], centroid_seed, centroids, n_points: n, diagonal: diag };
    for k in 0..cfg.bins {
        if acc.count[k] > 0 {
            rep.bin_centers.push((k as f64 + 0.5) / cfg.bins as f64);
            rep.gamma.push(acc.sum[k] / (2.0 * acc.count[k] as f64));
            rep.counts.push(acc.count[k]);
        }
    }
    Ok(rep)
}

/// Distance of every labeled vertex to the BRep entity it was assigned:
/// the corner for junctions, the co-edge polyline for boundaries, the
/// face surface otherwise.
pub fn residual_field(c: &ChainComplex, m: &ScanMesh) -> Result<Vec<f64>, EvalError> {
    let labels = m.labels.as_ref().ok_or(EvalError::MissingLabels)?;
    Ok(m
        .positions
        .iter()
        .zip(labels)
        .map(|(p, l)| {
            if let Some(j) = &l.junction {
                return (c.corners[j.corner_id].position - p).norm();
            }
            if let Some(e) = l.edge_id.filter(|_| l.is_boundary()) {
                return polyline_distance(p, &c.coedges[e].polyline);
            }
            l.face_id.map_or(0.0, |f| c.faces[f].projection_distance(p))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(n: usize, seed: u64) -> (Vec<Vec3>, Vec<f64>) {
        let mut r = rng::stream(seed, 1);
        let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(r.random(), r.random(), r.random())).collect();
        let z = pts.iter().map(|p| (3.0 * p.x).sin() + p.y * p.z).collect();
        (pts, z)
    }

    #[test]
    fn constant_field_is_zero() {
        let (p, _) = cloud(200, 1);
        let rep = semivariogram(&p, &vec![2.5; 200], &Default::default(), 0, Exec::default()).unwrap();
        assert!(rep.gamma.iter().all(|g| *g == 0.0));
        assert_eq!(rep.counts.iter().sum::<u64>(), 200 * 199 / 2);
    }

    #[test]
    fn two_points() {
        let p = [Vec3::zeros(), Vec3::new(1.0, 2.0, 2.0)];
        let rep = semivariogram(&p, &[0.0, 1.0], &Default::default(), 0, Exec::default()).unwrap();
        assert_eq!(rep.gamma, vec![0.5]);
        assert_eq!(rep.counts, vec![1]);
        assert_eq!(rep.bin_centers, vec![0.975]);
    }

    #[test]
    fn errors() {
        let d = SemivariogramConfig::default();
        assert!(matches!(semivariogram(&[Vec3::zeros()], &[1.0], &d, 0, Exec::default()), Err(EvalError::InsufficientPoints(1))));
        assert!(matches!(semivariogram(&[Vec3::zeros(); 2], &[1.0], &d, 0, Exec::default()), Err(EvalError::LengthMismatch { .. })));
        assert!(semivariogram(&[Vec3::zeros(), Vec3::x()], &[1.0, f64::NAN], &d, 0, Exec::default()).is_err());
    }

    #[test]
    fn subsampled_mode_is_deterministic() {
        let (p, z) = cloud(3000, 5);
        let cfg = SemivariogramConfig { pair_cap: 500, ..Default::default() };
        let a = semivariogram(&p, &z, &cfg, 9, Exec::Sequential).unwrap();
        let b = semivariogram(&p, &z, &cfg, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.centroids, 8);
        assert_eq!(a.counts.iter().sum::<u64>(), 8 * 500 * 499 / 2);
    }
}
