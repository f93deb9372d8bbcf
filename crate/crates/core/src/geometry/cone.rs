use std::f64::consts::{FRAC_PI_2, PI};

use super::{angle_diff, Polygon, Vec2, AREA_EPS, EPS};
use crate::dataset::KinematicState;

/// Largest angular step used when discretizing the cone arc (5°).
pub const MAX_ARC_STEP: f64 = 5.0 * PI / 180.0;

/// Circular sector of positions a VRU may reach within the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskCone {
    pub apex: Vec2,
    pub axis_heading: f64,
    pub half_angle: f64,
    pub radius: f64,
}

/// Cone at the VRU position along its heading with radius `speed · horizon`.
///
/// Speeds below `v_stationary` collapse the cone to radius zero.
pub fn build_cone(
    state: &KinematicState,
    half_angle: f64,
    horizon: f64,
    v_stationary: f64,
) -> RiskCone {
    debug_assert!(horizon > 0.0);
    debug_assert!(half_angle > 0.0 && half_angle <= PI);
    let radius = if state.speed < v_stationary {
        0.0
    } else {
        state.speed * horizon
    };
    RiskCone {
        apex: state.position,
        axis_heading: state.heading,
        half_angle,
        radius,
    }
}

impl RiskCone {
    pub fn is_degenerate(&self) -> bool {
        self.radius <= EPS
    }

    /// Exact sector membership (closed).
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.apex;
        let r = d.norm();
        if r > self.radius + EPS {
            return false;
        }
        if r <= EPS {
            return true;
        }
        angle_diff(d.y.atan2(d.x), self.axis_heading).abs() <= self.half_angle + EPS
    }

    /// Boundary ray directions at `axis ± half_angle`.
    pub fn boundary_directions(&self) -> (Vec2, Vec2) {
        (
            Vec2::from_angle(self.axis_heading - self.half_angle),
            Vec2::from_angle(self.axis_heading + self.half_angle),
        )
    }

    /// Convex polygons covering the sector, with arc chords no wider than
    /// `max_step`. Sectors wider than a half-plane are split along the axis.
    pub fn to_polygons(&self, max_step: f64) -> Vec<Polygon> {
        if self.is_degenerate() {
            return Vec::new();
        }
        if self.half_angle > FRAC_PI_2 + EPS {
            let h = self.half_angle / 2.0;
            return [self.axis_heading - h, self.axis_heading + h]
                .into_iter()
                .flat_map(|axis| self.sector(axis, h, max_step))
                .collect();
        }
        self.sector(self.axis_heading, self.half_angle, max_step)
            .into_iter()
            .collect()
    }

    fn sector(&self, axis: f64, half: f64, max_step: f64) -> Option<Polygon> {
        let span = 2.0 * half;
        let n = ((span / max_step).ceil() as usize).max(1);
        let mut v = Vec::with_capacity(n + 2);
        v.push(self.apex);
        for k in 0..=n {
            let a = axis - half + span * (k as f64) / (n as f64);
            v.push(self.apex + Vec2::from_angle(a) * self.radius);
        }
        let poly = Polygon::from_ccw(super::polygon::dedup_ring(v));
        (poly.vertices().len() >= 3 && poly.area() > AREA_EPS).then_some(poly)
    }
}
