//! Analytic surface evaluation, projection and principal curvatures.
//!
//! Every analytic surface is parameterized so that `∂u × ∂v` points along the
//! natural (outward) normal; a face's `reversed` flag flips it.

use std::f64::consts::{PI, TAU};

use crate::geom::{frame_from, Mat3, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct Tessellation {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Tessellation {
    /// Area-weighted vertex normals following triangle winding.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut n = vec![Vec3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let fnrm = (b - a).cross(&(c - a));
            for &i in t {
                n[i] += fnrm;
            }
        }
        n.into_iter()
            .map(|v| if v.norm() > 0.0 { v.normalize() } else { Vec3::z() })
            .collect()
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| crate::geom::triangle_area(&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]))
            .sum()
    }
}

/// Orthonormal placement shared by the rotational surfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub origin: Vec3,
    pub axis: Vec3,
    pub xdir: Vec3,
    pub ydir: Vec3,
}

impl Placement {
    pub fn new(origin: Vec3, axis: Vec3, xdir: Vec3) -> Self {
        let axis = axis.normalize();
        let xdir = (xdir - axis * xdir.dot(&axis)).normalize();
        let ydir = axis.cross(&xdir);
        Placement { origin, axis, xdir, ydir }
    }

    fn radial(&self, u: f64) -> Vec3 {
        self.xdir * u.cos() + self.ydir * u.sin()
    }

    fn tangential(&self, u: f64) -> Vec3 {
        -self.xdir * u.sin() + self.ydir * u.cos()
    }

    /// Local coordinates (x, y, z) of `p`.
    fn local(&self, p: &Vec3) -> Vec3 {
        let w = p - self.origin;
        Vec3::new(w.dot(&self.xdir), w.dot(&self.ydir), w.dot(&self.axis))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    /// `origin + u·xdir + v·ydir`, with `axis` the plane normal.
    Plane(Placement),
    Cylinder { at: Placement, radius: f64 },
    /// Radius `radius + v·tan(half_angle)` at height `v` along the axis.
    Cone { at: Placement, radius: f64, half_angle: f64 },
    /// `u` longitude, `v` latitude.
    Sphere { at: Placement, radius: f64 },
    Torus { at: Placement, major: f64, minor: f64 },
    /// Tessellation fallback for surfaces without a closed-form parameterization.
    Mesh(Tessellation),
}

/// Result of projecting a point onto a surface.
#[derive(Clone, Copy, Debug)]
pub struct Projection {
    pub uv: [f64; 2],
    pub point: Vec3,
    pub distance: f64,
}

impl Surface {
    pub fn is_analytic(&self) -> bool {
        !matches!(self, Surface::Mesh(_))
    }

    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        match self {
            Surface::Plane(at) => at.origin + at.xdir * u + at.ydir * v,
            Surface::Cylinder { at, radius } => at.origin + at.radial(u) * *radius + at.axis * v,
            Surface::Cone { at, radius, half_angle } => {
                at.origin + at.radial(u) * (radius + v * half_angle.tan()) + at.axis * v
            }
            Surface::Sphere { at, radius } => {
                at.origin + (at.radial(u) * v.cos() + at.axis * v.sin()) * *radius
            }
            Surface::Torus { at, major, minor } => {
                at.origin + at.radial(u) * (major + minor * v.cos()) + at.axis * (minor * v.sin())
            }
            Surface::Mesh(_) => Vec3::zeros(),
        }
    }

    /// Partial derivatives `(∂u, ∂v)`.
    pub fn derivatives(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        match self {
            Surface::Plane(at) => (at.xdir, at.ydir),
            Surface::Cylinder { at, radius } => (at.tangential(u) * *radius, at.axis),
            Surface::Cone { at, radius, half_angle } => {
                let tan = half_angle.tan();
                (at.tangential(u) * (radius + v * tan), at.radial(u) * tan + at.axis)
            }
            Surface::Sphere { at, radius } => (
                at.tangential(u) * (radius * v.cos()),
                (-at.radial(u) * v.sin() + at.axis * v.cos()) * *radius,
            ),
            Surface::Torus { at, major, minor } => (
                at.tangential(u) * (major + minor * v.cos()),
                (-at.radial(u) * v.sin() + at.axis * v.cos()) * *minor,
            ),
            Surface::Mesh(_) => (Vec3::x(), Vec3::y()),
        }
    }

    /// Natural unit normal at `(u, v)`.
    pub fn normal(&self, u: f64, v: f64) -> Vec3 {
        match self {
            Surface::Plane(at) => at.axis,
            Surface::Cylinder { at, .. } => at.radial(u),
            Surface::Sphere { at, .. } | Surface::Torus { at, .. } => at.radial(u) * v.cos() + at.axis * v.sin(),
            Surface::Cone { at, half_angle, .. } => at.radial(u) * half_angle.cos() - at.axis * half_angle.sin(),
            Surface::Mesh(_) => Vec3::z(),
        }
    }

    /// Orthonormal frame `[t, u, n]` at a parameter, `t` along `∂u` where defined.
    pub fn frame(&self, u: f64, v: f64, reversed: bool) -> Mat3 {
        let (du, dv) = self.derivatives(u, v);
        let n = if reversed { -self.normal(u, v) } else { self.normal(u, v) };
        let t = if du.norm() > 1e-12 { du } else { dv };
        frame_from(&t, &n)
    }

    /// Signed principal curvatures `(κ1, κ2)`, `|κ1| ≥ |κ2|`, positive where the
    /// surface bends away from its natural normal. Returns `None` for `Mesh`.
    pub fn curvatures(&self, _u: f64, v: f64) -> Option<(f64, f64)> {
        let k = match self {
            Surface::Plane(_) => (0.0, 0.0),
            Surface::Cylinder { radius, .. } => (1.0 / radius, 0.0),
            Surface::Sphere { radius, .. } => (1.0 / radius, 1.0 / radius),
            Surface::Cone { radius, half_angle, .. } => {
                let rho = radius + v * half_angle.tan();
                (half_angle.cos() / rho, 0.0)
            }
            Surface::Torus { major, minor, .. } => {
                let a = 1.0 / minor;
                let b = v.cos() / (major + minor * v.cos());
                if a.abs() >= b.abs() {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            Surface::Mesh(_) => return None,
        };
        Some(k)
    }

    /// Parameter of the closest point on the untrimmed surface.
    fn inverse(&self, p: &Vec3) -> [f64; 2] {
        match self {
            Surface::Plane(at) => {
                let l = at.local(p);
                [l.x, l.y]
            }
            Surface::Cylinder { at, .. } => {
                let l = at.local(p);
                [l.y.atan2(l.x), l.z]
            }
            Surface::Cone { at, radius, half_angle } => {
                let l = at.local(p);
                let rho = (l.x * l.x + l.y * l.y).sqrt();
                let tan = half_angle.tan();
                // closest point on the generator line (radius + t·tan, t)
                let t = ((rho - radius) * tan + l.z) / (1.0 + tan * tan);
                [l.y.atan2(l.x), t]
            }
            Surface::Sphere { at, .. } => {
                let l = at.local(p);
                let rho = (l.x * l.x + l.y * l.y).sqrt();
                [l.y.atan2(l.x), l.z.atan2(rho)]
            }
            Surface::Torus { at, major, .. } => {
                let l = at.local(p);
                let rho = (l.x * l.x + l.y * l.y).sqrt();
                [l.y.atan2(l.x), l.z.atan2(rho - major)]
            }
            Surface::Mesh(_) => [0.0, 0.0],
        }
    }

    /// Projects `p` onto the surface restricted to a uv box `[u0, u1, v0, v1]`
    /// (periodic `u` is wrapped into the box before clamping).
    pub fn project(&self, p: &Vec3, domain: Option<[f64; 4]>) -> Projection {
        if let Surface::Mesh(tess) = self {
            let (i, d) = tess
                .vertices
                .iter()
                .enumerate()
                .map(|(i, q)| (i, (q - p).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            return Projection {
                uv: [i as f64, 0.0],
                point: tess.vertices.get(i).copied().unwrap_or(*p),
                distance: d,
            };
        }
        let [mut u, mut v] = self.inverse(p);
        if let Some([u0, u1, v0, v1]) = domain {
            if !matches!(self, Surface::Plane(_)) {
                u = wrap_into(u, u0);
                if u > u1 {
                    // outside the angular span: snap to the nearer end (angular distance)
                    let to_u1 = u - u1;
                    let to_u0 = u0 + TAU - u;
                    u = if to_u1 <= to_u0 { u1 } else { u0 };
                }
            } else {
                u = u.clamp(u0, u1);
            }
            v = v.clamp(v0, v1);
        }
        let q = self.point(u, v);
        Projection { uv: [u, v], point: q, distance: (p - q).norm() }
    }

    /// Model-space lengths of the uv box edges: the longest u-isoline and v-isoline.
    pub fn domain_extent(&self, d: [f64; 4]) -> (f64, f64) {
        let (du, dv) = (d[1] - d[0], d[3] - d[2]);
        match self {
            Surface::Plane(_) => (du, dv),
            Surface::Cylinder { radius, .. } => (radius * du, dv),
            Surface::Cone { radius, half_angle, .. } => {
                let r_max = (radius + d[2] * half_angle.tan()).abs().max((radius + d[3] * half_angle.tan()).abs());
                (r_max * du, dv / half_angle.cos())
            }
            Surface::Sphere { radius, .. } => (radius * du, radius * dv),
            Surface::Torus { major, minor, .. } => ((major + minor) * du, minor * dv),
            Surface::Mesh(_) => (0.0, 0.0),
        }
    }

    pub fn is_u_periodic(&self) -> bool {
        !matches!(self, Surface::Plane(_) | Surface::Mesh(_))
    }

    pub fn is_v_periodic(&self) -> bool {
        matches!(self, Surface::Torus { .. })
    }
}

fn wrap_into(u: f64, u0: f64) -> f64 {
    let mut x = (u - u0) % TAU;
    if x < 0.0 {
        x += TAU;
    }
    u0 + x
}

/// Default uv domain when none is supplied: a full period where periodic.
pub fn default_domain(s: &Surface) -> [f64; 4] {
    match s {
        Surface::Sphere { .. } => [0.0, TAU, -PI / 2.0, PI / 2.0],
        Surface::Torus { .. } => [0.0, TAU, 0.0, TAU],
        _ => [0.0, TAU, 0.0, 1.0],
    }
}
