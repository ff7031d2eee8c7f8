//! Small vector helpers shared by every stage.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[inline]
pub fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

#[inline]
pub fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.extend(p);
        }
        b
    }

    pub fn extend(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Closest point on segment `ab` to `p`.
pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

/// Distance from `p` to an open polyline. A single point is treated as a degenerate segment.
pub fn polyline_distance(p: &Vec3, pts: &[Vec3]) -> f64 {
    match pts.len() {
        0 => f64::INFINITY,
        1 => (p - pts[0]).norm(),
        _ => pts
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Unit vector perpendicular to `v` (assumed unit), chosen deterministically:
/// `v × ẑ` unless that is nearly zero, then `v × x̂`.
pub fn perpendicular(v: &Vec3) -> Vec3 {
    let c = v.cross(&Vec3::z());
    if c.norm() >= 1e-6 {
        c.normalize()
    } else {
        v.cross(&Vec3::x()).normalize()
    }
}

/// Newell normal of a closed polygon. Returns `None` for degenerate input.
pub fn newell_normal(pts: &[Vec3]) -> Option<Vec3> {
    let mut n = Vec3::zeros();
    for (i, a) in pts.iter().enumerate() {
        let b = &pts[(i + 1) % pts.len()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    let len = n.norm();
    (len > 1e-300).then(|| n / len)
}

/// Builds a right-handed orthonormal frame `[t, u, n]` (as columns) from a tangent hint
/// and a normal hint. The normal wins; the tangent is projected into its plane.
pub fn frame_from(tangent: &Vec3, normal: &Vec3) -> Mat3 {
    let n = normal.normalize();
    let mut t = tangent - n * tangent.dot(&n);
    if t.norm() < 1e-12 {
        t = perpendicular(&n);
    }
    let t = t.normalize();
    let u = n.cross(&t);
    Mat3::from_columns(&[t, u, n])
}

/// Sum of a polyline's segment lengths.
pub fn polyline_length(pts: &[Vec3]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Length-weighted centroid of a closed polyline (vertex mean when degenerate).
pub fn polyline_centroid(pts: &[Vec3]) -> Vec3 {
    let mut acc = Vec3::zeros();
    let mut total = 0.0;
    for (i, a) in pts.iter().enumerate() {
        let b = &pts[(i + 1) % pts.len()];
        let l = (b - a).norm();
        acc += (a + b) * (0.5 * l);
        total += l;
    }
    if total > 0.0 {
        acc / total
    } else {
        pts.iter().sum::<Vec3>() / pts.len().max(1) as f64
    }
}
