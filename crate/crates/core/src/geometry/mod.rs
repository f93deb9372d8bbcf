//! Planar geometry used by the risk pipeline and the sensor model.
//!
//! Everything is expressed in the recording's local metric frame. Regions that
//! the risk pipeline works with (corridor pieces, cone sectors, overlaps) are
//! kept as collections of convex polygons so that clipping stays exact and
//! cheap.

mod clip;
mod cone;
mod corridor;
mod polygon;
mod ray;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use clip::{clip_convex, intersect_regions, triangulate};
pub use cone::{build_cone, RiskCone, MAX_ARC_STEP};
pub use corridor::{build_corridor, corridor_distance_window, Corridor};
pub use polygon::{oriented_box, Polygon};
pub use ray::{cast_ray, segment_blocked, segment_blocked_convex};

/// Absolute tolerance for geometric predicates, in meters.
pub const EPS: f64 = 1e-9;

/// Overlap parts with less area than this are treated as touching only.
pub const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 { x: c, y: s }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec2>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Aabb {
            min: first,
            max: first,
        };
        for p in it {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x + EPS
            && o.min.x <= self.max.x + EPS
            && self.min.y <= o.max.y + EPS
            && o.min.y <= self.max.y + EPS
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x - EPS
            && p.x <= self.max.x + EPS
            && p.y >= self.min.y - EPS
            && p.y <= self.max.y + EPS
    }
}

/// Distance interval along a path or away from a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWindow {
    pub d_min: f64,
    pub d_max: f64,
}

impl DistanceWindow {
    pub fn new(d_min: f64, d_max: f64) -> Self {
        debug_assert!(
            d_min >= 0.0 && d_min <= d_max,
            "bad window [{d_min}, {d_max}]"
        );
        DistanceWindow { d_min, d_max }
    }
}

/// Distance from `p` to the segment `[a, b]` together with the segment
/// parameter of the closest point.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let t = if len_sq <= EPS * EPS {
        0.0
    } else {
        ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    };
    (p.distance(a + ab * t), t)
}

/// Min and max Euclidean distance from `apex` to the union of `region`.
///
/// `d_min` is zero when the apex lies inside any part.
pub fn radial_distance_window(apex: Vec2, region: &[Polygon]) -> Option<DistanceWindow> {
    if region.is_empty() {
        return None;
    }
    let mut d_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    for part in region {
        if part.contains(apex) {
            d_min = 0.0;
        }
        let verts = part.vertices();
        for (i, &v) in verts.iter().enumerate() {
            d_max = d_max.max(apex.distance(v));
            if d_min > 0.0 {
                let w = verts[(i + 1) % verts.len()];
                d_min = d_min.min(point_segment_distance(apex, v, w).0);
            }
        }
    }
    Some(DistanceWindow::new(d_min, d_max.max(d_min)))
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a.rem_euclid(tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

/// Signed smallest difference `a - b` in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::new(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn radial_window_corner_analysis() {
        let w = radial_distance_window(Vec2::ZERO, &[square(3.0, 0.0, 4.0, 1.0)]).unwrap();
        assert!((w.d_min - 3.0).abs() < 1e-12);
        assert!((w.d_max - 17f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radial_window_apex_inside() {
        let w = radial_distance_window(Vec2::new(0.5, 0.5), &[square(0.0, 0.0, 1.0, 1.0)]).unwrap();
        assert_eq!(w.d_min, 0.0);
        assert!((w.d_max - 0.5f64.hypot(0.5)).abs() < 1e-12);
    }

    #[test]
    fn radial_window_far_triangle() {
        let tri = Polygon::new(vec![
            Vec2::new(50.0, 0.0),
            Vec2::new(52.0, 0.0),
            Vec2::new(51.0, 3.0),
        ])
        .unwrap();
        let w = radial_distance_window(Vec2::ZERO, &[tri]).unwrap();
        assert!((w.d_max - 52.0).abs() < 1e-12);
        assert!((w.d_min - 50.0).abs() < 1e-12);
    }

    #[test]
    fn radial_window_empty_region() {
        assert!(radial_distance_window(Vec2::ZERO, &[]).is_none());
    }

    #[test]
    fn angle_helpers() {
        use std::f64::consts::PI;
        assert!((normalize_angle(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((angle_diff(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_diff(2.0 * PI - 0.1, 0.1) + 0.2).abs() < 1e-12);
    }
}
