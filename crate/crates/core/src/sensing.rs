//! Onboard 360° sensor with occlusion.
//!
//! Beams are modeled as line-of-sight rays from the ego centroid to sample
//! points on each target's outline. Vehicles are detected when strictly more
//! than the configured fraction of their outline is visible, VRUs when at
//! least the VRU fraction is (all of it by default).

use serde::{Deserialize, Serialize};

use crate::dataset::{AgentClass, AgentId, AgentView, Frame, KinematicState};
use crate::error::{Error, Result};
use crate::geometry::{oriented_box, segment_blocked_convex, Aabb, Polygon, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Disables sensing entirely (LEMs then only fill from V2X).
    pub enabled: bool,
    pub max_range: f64,
    pub outline_samples_vehicle: usize,
    pub outline_samples_vru: usize,
    /// Vehicles need a visible fraction strictly above this.
    pub vehicle_coverage_threshold: f64,
    /// VRUs need a visible fraction at or above this.
    pub vru_coverage_threshold: f64,
    pub vrus_occlude: bool,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            enabled: true,
            max_range: 75.0,
            outline_samples_vehicle: 16,
            outline_samples_vru: 4,
            vehicle_coverage_threshold: 0.5,
            vru_coverage_threshold: 1.0,
            vrus_occlude: false,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("sensor: {m}")));
        if !(self.max_range > 0.0) {
            return bad("max_range must be positive");
        }
        if self.outline_samples_vehicle < 4 || self.outline_samples_vru < 4 {
            return bad("outline sample counts must be at least 4");
        }
        for t in [self.vehicle_coverage_threshold, self.vru_coverage_threshold] {
            if !(t > 0.0 && t <= 1.0) {
                return bad("coverage thresholds must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub agent_id: AgentId,
    pub observed_state: KinematicState,
    pub frame: Frame,
}

/// `n` points on the boundary of a rectangle: its four corners plus `n - 4`
/// points spread over the edges in proportion to edge length.
pub fn outline_points(rect: &Polygon, n: usize) -> Vec<Vec2> {
    let v = rect.vertices();
    let extra = n.saturating_sub(v.len());
    let lens: Vec<f64> = rect.edges().map(|(a, b)| a.distance(b)).collect();
    let total: f64 = lens.iter().sum();

    // largest-remainder apportionment of the extra points
    let quotas: Vec<f64> = lens.iter().map(|l| extra as f64 * l / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..lens.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(extra - assigned) {
        counts[i] += 1;
    }

    let mut out = Vec::with_capacity(n.max(v.len()));
    for (i, (a, b)) in rect.edges().enumerate() {
        out.push(a);
        let k = counts[i];
        for j in 1..=k {
            out.push(a.lerp(b, j as f64 / (k + 1) as f64));
        }
    }
    out
}

struct Body {
    id: AgentId,
    class: AgentClass,
    state: KinematicState,
    footprint: Polygon,
    /// Half the footprint's bounding-box diagonal.
    reach: f64,
}

/// Footprints of every agent in a frame, shared by all egos in that frame.
pub struct SensorScene {
    bodies: Vec<Body>,
}

impl SensorScene {
    pub fn new(agents: &[AgentView<'_>]) -> Result<SensorScene> {
        let bodies = agents
            .iter()
            .map(|a| {
                let footprint = oriented_box(a.state, a.meta)?;
                let bb = footprint.bbox();
                Ok(Body {
                    id: a.meta.agent_id,
                    class: a.meta.class,
                    state: *a.state,
                    reach: (bb.max - bb.min).norm() / 2.0,
                    footprint,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SensorScene { bodies })
    }

    /// Detections of every other agent by `ego`, in id order.
    pub fn sense(&self, ego: AgentId, config: &SensorConfig, frame: Frame) -> Vec<Detection> {
        if !config.enabled {
            return Vec::new();
        }
        let Some(ego_body) = self.bodies.iter().find(|b| b.id == ego) else {
            return Vec::new();
        };
        let origin = ego_body.state.position;
        // anything that can block a ray lies within sensor range
        let in_range: Vec<&Body> = self
            .bodies
            .iter()
            .filter(|b| {
                b.id != ego && origin.distance(b.state.position) - b.reach <= config.max_range
            })
            .collect();
        let occluders: Vec<&Body> = in_range
            .iter()
            .copied()
            .filter(|b| config.vrus_occlude || b.class.is_vehicle())
            .collect();
        in_range
            .iter()
            .filter(|t| self.detects(origin, t, &occluders, config))
            .map(|t| Detection {
                agent_id: t.id,
                observed_state: t.state,
                frame,
            })
            .collect()
    }

    fn detects(
        &self,
        origin: Vec2,
        target: &Body,
        occluders: &[&Body],
        config: &SensorConfig,
    ) -> bool {
        let (n, threshold, strict) = if target.class.is_vru() {
            (
                config.outline_samples_vru,
                config.vru_coverage_threshold,
                false,
            )
        } else {
            (
                config.outline_samples_vehicle,
                config.vehicle_coverage_threshold,
                true,
            )
        };
        let sight = Aabb::from_points(&[origin])
            .expect("point")
            .union(target.footprint.bbox());
        let obstacles: Vec<&Polygon> = occluders
            .iter()
            .filter(|b| b.id != target.id && b.footprint.bbox().overlaps(&sight))
            .map(|b| &b.footprint)
            .collect();
        let points = outline_points(&target.footprint, n);
        let total = points.len() as f64;
        let passes = |visible: usize| {
            let fraction = visible as f64 / total;
            if strict {
                fraction > threshold
            } else {
                fraction >= threshold - 1e-12
            }
        };
        let mut visible = 0;
        for (k, &p) in points.iter().enumerate() {
            let seen = origin.distance(p) <= config.max_range
                && !obstacles
                    .iter()
                    .any(|o| segment_blocked_convex(origin, p, o));
            if seen {
                visible += 1;
                if passes(visible) {
                    return true;
                }
            }
            let remaining = points.len() - k - 1;
            if !passes(visible + remaining) {
                return false;
            }
        }
        passes(visible)
    }
}

/// Detections of `others` by the vehicle `ego`.
pub fn sense(
    ego: AgentView<'_>,
    others: &[AgentView<'_>],
    config: &SensorConfig,
    frame: Frame,
) -> Result<Vec<Detection>> {
    let mut all = Vec::with_capacity(others.len() + 1);
    all.push(ego);
    all.extend(
        others
            .iter()
            .copied()
            .filter(|o| o.meta.agent_id != ego.meta.agent_id),
    );
    let scene = SensorScene::new(&all)?;
    Ok(scene.sense(ego.meta.agent_id, config, frame))
}
