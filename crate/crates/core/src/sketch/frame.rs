//! Local PCA frames and circle fitting for co-edge samples.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geom::{Mat3, Vec3};

use super::SketchError;

/// Orthonormal right-handed frame `(e0, e1, e2)` at the sample centroid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaFrame {
    pub origin: Vec3,
    pub e0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Covariance eigenvalues, descending.
    pub variances: [f64; 3],
}

impl PcaFrame {
    /// `(t, u, w)` coordinates of `x`.
    pub fn local(&self, x: &Vec3) -> Vec3 {
        let d = x - self.origin;
        Vec3::new(self.e0.dot(&d), self.e1.dot(&d), self.e2.dot(&d))
    }

    pub fn world(&self, l: &Vec3) -> Vec3 {
        self.origin + self.e0 * l.x + self.e1 * l.y + self.e2 * l.z
    }

    /// True when the points span no second direction.
    pub fn is_collinear(&self) -> bool {
        self.variances[1] <= 1e-12 * self.variances[0]
    }
}

/// PCA frame of a point set. `e0` is oriented along the traversal
/// (first → last point) when that is defined. Collinear input takes
/// `e1 = normalize(e0 × ẑ)`, or `e0 × x̂` when `e0 ∥ ẑ`.
pub fn pca_frame(points: &[Vec3]) -> Result<PcaFrame, SketchError> {
    let n = points.len();
    if n == 0 {
        return Err(SketchError::DegenerateInput);
    }
    let origin = points.iter().sum::<Vec3>() / n as f64;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - origin;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    if cov.trace() <= 0.0 {
        return Err(SketchError::DegenerateInput);
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let variances = order.map(|i| eig.eigenvalues[i].max(0.0));
    let mut e0: Vec3 = eig.eigenvectors.column(order[0]).into();
    let chord = points[n - 1] - points[0];
    let flip = if chord.norm() > 1e-12 * variances[0].sqrt().max(1e-300) {
        e0.dot(&chord) < 0.0
    } else {
        let k = e0.iamax();
        e0[k] < 0.0
    };
    if flip {
        e0 = -e0;
    }
    let mut frame = PcaFrame { origin, e0, e1: Vec3::zeros(), e2: Vec3::zeros(), variances };
    if frame.is_collinear() {
        let c = e0.cross(&Vec3::z());
        frame.e1 = if c.norm() >= 1e-6 { c.normalize() } else { e0.cross(&Vec3::x()).normalize() };
    } else {
        let mut e2: Vec3 = eig.eigenvectors.column(order[2]).into();
        let k = e2.iamax();
        if e2[k] < 0.0 {
            e2 = -e2;
        }
        frame.e1 = e2.cross(&e0).normalize();
    }
    frame.e2 = e0.cross(&frame.e1);
    Ok(frame)
}

/// Circle fitted in the PCA plane of its samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub center: Vec3,
    pub radius: f64,
    pub frame: PcaFrame,
    /// Unwrapped polar angle of every input point, monotone along the input.
    pub theta: Vec<f64>,
    pub rms: f64,
}

impl CircleFit {
    /// In-plane radial unit direction at angle `a`.
    pub fn rho(&self, a: f64) -> Vec3 {
        self.frame.e0 * a.cos() + self.frame.e1 * a.sin()
    }

    pub fn theta_range(&self) -> [f64; 2] {
        [self.theta[0], self.theta[self.theta.len() - 1]]
    }
}

/// Algebraic (Kåsa) fit followed by one Gauss-Newton step on the geometric
/// residuals `|p − c| − R`.
pub fn fit_circle(points: &[Vec3]) -> Result<CircleFit, SketchError> {
    if points.len() < 3 {
        return Err(SketchError::Collinear);
    }
    let frame = pca_frame(points)?;
    if frame.is_collinear() {
        return Err(SketchError::Collinear);
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| frame.local(p)).map(|l| (l.x, l.y)).collect();
    let n = xy.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => xy[i].0,
        1 => xy[i].1,
        _ => 1.0,
    });
    let b = DVector::from_fn(n, |i, _| -(xy[i].0 * xy[i].0 + xy[i].1 * xy[i].1));
    let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|_| SketchError::Collinear)?;
    let (mut cx, mut cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    if !(r2 > 0.0 && r2.is_finite()) {
        return Err(SketchError::Collinear);
    }
    let mut r = r2.sqrt();

    let residuals = |cx: f64, cy: f64, r: f64| -> Vec<f64> { xy.iter().map(|(x, y)| (x - cx).hypot(y - cy) - r).collect() };
    let res = residuals(cx, cy, r);
    let j = DMatrix::from_fn(n, 3, |i, k| {
        let (dx, dy) = (xy[i].0 - cx, xy[i].1 - cy);
        let d = dx.hypot(dy).max(1e-300);
        match k {
            0 => -dx / d,
            1 => -dy / d,
            _ => -1.0,
        }
    });
    if let Ok(step) = j.svd(true, true).solve(&DVector::from_iterator(n, res.iter().map(|x| -x)), 1e-14) {
        let (nx, ny, nr) = (cx + step[0], cy + step[1], r + step[2]);
        let ss = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        if nr > 0.0 && ss(&residuals(nx, ny, nr)) <= ss(&res) {
            (cx, cy, r) = (nx, ny, nr);
        }
    }
    let res = residuals(cx, cy, r);
    let rms = (res.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();

    let mut theta = Vec::with_capacity(n);
    for (x, y) in &xy {
        let a = (y - cy).atan2(x - cx);
        let t = match theta.last() {
            None => a,
            Some(&prev) => {
                let mut d = a - prev;
                while d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                }
                while d <= -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                prev + d
            }
        };
        theta.push(t);
    }
    let center = frame.origin + frame.e0 * cx + frame.e1 * cy;
    Ok(CircleFit { center, radius: r, frame, theta, rms })
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::rng;

    #[test]
    fn axis_points() {
        let pts: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let f = pca_frame(&pts).unwrap();
        assert_eq!(f.origin, Vec3::new(2.0, 0.0, 0.0));
        assert!((f.e0 - Vec3::x()).norm() < 1e-12);
        assert!(f.is_collinear());
        assert!((f.e1 - Vec3::x().cross(&Vec3::z()).normalize()).norm() < 1e-12);
        let vertical = pca_frame(&[Vec3::zeros(), Vec3::z()]).unwrap();
        assert!((vertical.e1 - Vec3::z().cross(&Vec3::x())).norm() < 1e-12);
    }

    #[test]
    fn l_shape_normal() {
        let (u, v) = (Vec3::new(1.0, 2.0, 0.5).normalize(), Vec3::new(-2.0, 1.0, 0.0).normalize());
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(u * i as f64);
        }
        for i in 1..6 {
            pts.push(v * i as f64 * 0.7);
        }
        let f = pca_frame(&pts).unwrap();
        let n = u.cross(&v).normalize();
        assert!(f.e2.cross(&n).norm() < 1e-9);
        assert!((f.e0.cross(&f.e1) - f.e2).norm() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(pca_frame(&[Vec3::x()]), Err(SketchError::DegenerateInput)));
        assert!(matches!(pca_frame(&[]), Err(SketchError::DegenerateInput)));
        let line: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_circle(&line), Err(SketchError::Collinear)));
    }

    #[test]
    fn three_points_exact() {
        let f = fit_circle(&[Vec3::x(), Vec3::y(), -Vec3::x()]).unwrap();
        assert!(f.center.norm() < 1e-12 && (f.radius - 1.0).abs() < 1e-12, "{:?}", f);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn noisy_circle_monte_carlo() {
        let noise = Normal::new(0.0, 1e-3).unwrap();
        for trial in 0..100 {
            let mut r = rng::stream(99, trial);
            let span = r.random_range(1.0..std::f64::consts::TAU);
            let pts: Vec<Vec3> = (0..40)
                .map(|i| {
                    let a = span * i as f64 / 39.0;
                    Vec3::new(2.0 * a.cos() + noise.sample(&mut r), 2.0 * a.sin() + noise.sample(&mut r), 1.0)
                })
                .collect();
            let f = fit_circle(&pts).unwrap();
            assert!((f.radius - 2.0).abs() < 5e-3, "trial {trial}: {}", f.radius);
        }
    }

    #[test]
    fn theta_is_unwrapped() {
        let pts: Vec<Vec3> = (0..=36).map(|i| {
            let a = 3.0 + std::f64::consts::TAU * i as f64 / 36.0;
            Vec3::new(a.cos(), a.sin(), 0.0)
        }).collect();
        let f = fit_circle(&pts).unwrap();
        assert!(f.theta.windows(2).all(|w| w[1] > w[0]) || f.theta.windows(2).all(|w| w[1] < w[0]));
        let [a, b] = f.theta_range();
        assert!(((b - a).abs() - std::f64::consts::TAU).abs() < 1e-9);
    }
}
