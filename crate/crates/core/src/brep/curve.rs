//! Coedge curve evaluation by arc length.

use std::f64::consts::TAU;

use crate::geom::{perpendicular, Vec3};

use super::surface::Placement;

#[derive(Clone, Debug, PartialEq)]
pub enum Curve {
    Line { start: Vec3, end: Vec3 },
    /// Traversed from angle `a0` to `a1` around `at.axis` (`a1 < a0` runs clockwise).
    Circle { at: Placement, radius: f64, a0: f64, a1: f64 },
    /// Everything without a closed form is evaluated along its dense polyline.
    Polyline { points: Vec<Vec3>, cumulative: Vec<f64> },
}

impl Curve {
    pub fn polyline(points: Vec<Vec3>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += (p - points[i - 1]).norm();
            }
            cumulative.push(acc);
        }
        Curve::Polyline { points, cumulative }
    }

    pub fn is_closed_circle(&self) -> bool {
        matches!(self, Curve::Circle { a0, a1, .. } if ((a1 - a0).abs() - TAU).abs() < 1e-9)
    }

    /// Position and unit tangent at fraction `f ∈ [0, 1]` of the curve's arc length.
    pub fn eval(&self, f: f64) -> (Vec3, Vec3) {
        match self {
            Curve::Line { start, end } => {
                let d = end - start;
                (start + d * f, d.normalize())
            }
            Curve::Circle { at, radius, a0, a1 } => {
                let a = a0 + (a1 - a0) * f;
                let radial = at.xdir * a.cos() + at.ydir * a.sin();
                let tang = (-at.xdir * a.sin() + at.ydir * a.cos()) * (a1 - a0).signum();
                (at.origin + radial * *radius, tang)
            }
            Curve::Polyline { points, cumulative } => {
                let total = *cumulative.last().unwrap_or(&0.0);
                let s = f.clamp(0.0, 1.0) * total;
                let i = match cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
                    Ok(i) => i.min(points.len() - 2),
                    Err(i) => i.saturating_sub(1).min(points.len() - 2),
                };
                let (a, b) = (points[i], points[i + 1]);
                let seg = cumulative[i + 1] - cumulative[i];
                let t = if seg > 0.0 { (s - cumulative[i]) / seg } else { 0.0 };
                let d = b - a;
                let tang = if d.norm() > 0.0 { d.normalize() } else { Vec3::x() };
                (a + d * t, tang)
            }
        }
    }

    /// A normal hint for frames: the outward radial for circles, else a
    /// deterministic perpendicular of the tangent.
    pub fn normal_hint(&self, f: f64) -> Vec3 {
        match self {
            Curve::Circle { at, a0, a1, .. } => {
                let a = a0 + (a1 - a0) * f;
                at.xdir * a.cos() + at.ydir * a.sin()
            }
            _ => perpendicular(&self.eval(f).1),
        }
    }

    /// Curvature of the curve itself (zero for lines and polylines).
    pub fn curvature(&self) -> f64 {
        match self {
            Curve::Circle { radius, .. } => 1.0 / radius,
            _ => 0.0,
        }
    }
}
