//! Reference oracles and random scene generators shared by the integration
//! tests. The oracles use only analytic geometry and brute-force sampling,
//! never the polygon machinery under test.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vru_risk::dataset::{AgentClass, AgentId, AgentMeta, KinematicState, PathSample, PlannedPath};
use vru_risk::geometry::Vec2;
use vru_risk::risk::RiskParams;
use vru_risk::sensing::{outline_points, SensorConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn meta(id: u32, class: AgentClass, length: f64, width: f64) -> AgentMeta {
    AgentMeta {
        agent_id: AgentId(id),
        class,
        length,
        width,
        initial_frame: 0,
        final_frame: 10_000,
    }
}

/// Planned path of constant speed and curvature, known in closed form.
#[derive(Debug, Clone, Copy)]
pub struct ArcPath {
    pub start: Vec2,
    pub heading: f64,
    pub speed: f64,
    /// Signed curvature; zero for a straight path.
    pub curvature: f64,
    pub horizon: f64,
}

impl ArcPath {
    pub fn length(&self) -> f64 {
        self.speed * self.horizon
    }

    pub fn point(&self, s: f64) -> Vec2 {
        let k = self.curvature;
        let local = if k.abs() < 1e-12 {
            Vec2::new(s, 0.0)
        } else {
            Vec2::new((k * s).sin() / k, (1.0 - (k * s).cos()) / k)
        };
        self.start + local.rotate(self.heading)
    }

    /// The path as the simulator would read it from a 25 Hz recording.
    pub fn sampled(&self) -> PlannedPath {
        let n = (self.horizon * 25.0).round() as usize;
        PlannedPath {
            samples: (0..=n)
                .map(|k| {
                    let t = k as f64 / 25.0;
                    PathSample {
                        time_offset: t,
                        position: self.point(self.speed * t),
                        arc_length: self.speed * t,
                    }
                })
                .collect(),
            horizon: n as f64 / 25.0,
        }
    }

    /// Arc length of `p` if it lies in the path buffered by `half_width`
    /// with flat end caps.
    pub fn corridor_arc(&self, p: Vec2, half_width: f64) -> Option<f64> {
        let q = (p - self.start).rotate(-self.heading);
        let len = self.length();
        let k = self.curvature;
        if k.abs() < 1e-12 {
            return (q.x >= 0.0 && q.x <= len && q.y.abs() <= half_width).then_some(q.x);
        }
        let r = 1.0 / k.abs();
        let center = Vec2::new(0.0, 1.0 / k);
        let d = q - center;
        if (d.norm() - r).abs() > half_width {
            return None;
        }
        // angle travelled from the start, measured around the center
        let start_dir = -center;
        let mut swept = start_dir.cross(d).atan2(start_dir.dot(d)) * k.signum();
        if swept < -PI / 2.0 {
            swept += TAU;
        }
        let s = swept * r;
        (s >= 0.0 && s <= len).then_some(s)
    }

    pub fn bbox(&self, half_width: f64) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let n = 200;
        for i in 0..=n {
            let p = self.point(self.length() * i as f64 / n as f64);
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let pad = Vec2::new(half_width + 0.1, half_width + 0.1);
        (lo - pad, hi + pad)
    }
}

/// Random vehicle/VRU pair around a curved or straight planned path.
#[derive(Debug, Clone)]
pub struct PairScene {
    pub ego_meta: AgentMeta,
    pub ego_state: KinematicState,
    pub path: ArcPath,
    pub vru_meta: AgentMeta,
    pub vru_state: KinematicState,
}

pub fn random_pair(r: &mut ChaCha8Rng) -> PairScene {
    let speed = r.gen_range(1.0..15.0);
    let heading = r.gen_range(0.0..TAU);
    let curvature = if r.gen_bool(0.3) {
        0.0
    } else {
        let max = (0.04_f64).min(2.5 / (speed * 5.0));
        r.gen_range(-max..max)
    };
    let start = Vec2::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
    let path = ArcPath {
        start,
        heading,
        speed,
        curvature,
        horizon: 5.0,
    };
    let ego_meta = meta(
        1,
        AgentClass::Car,
        r.gen_range(3.5..6.0),
        r.gen_range(1.6..2.4),
    );
    let ego_state = KinematicState::new(start, heading, Vec2::from_angle(heading) * speed);

    let bike = r.gen_bool(0.4);
    let (class, len, width) = if bike {
        (AgentClass::Bicycle, 2.0, 0.7)
    } else {
        (AgentClass::Pedestrian, 0.5, 0.5)
    };
    let vru_speed = if r.gen_bool(0.1) {
        0.0
    } else if bike {
        r.gen_range(2.0..7.0)
    } else {
        r.gen_range(0.5..2.2)
    };
    let s = r.gen_range(0.0..path.length());
    let on_path = path.point(s);
    let tangent = path.point((s + 0.01).min(path.length())) - path.point((s - 0.01).max(0.0));
    let normal = tangent.perp() * (1.0 / tangent.norm());
    let offset = r.gen_range(-12.0..12.0);
    let pos = on_path + normal * offset;
    let vru_heading = if r.gen_bool(0.7) {
        let to_path = on_path - pos;
        to_path.y.atan2(to_path.x) + r.gen_range(-1.0..1.0)
    } else {
        r.gen_range(0.0..TAU)
    };
    PairScene {
        ego_meta,
        ego_state,
        path,
        vru_meta: meta(2, class, len, width),
        vru_state: KinematicState::new(pos, vru_heading, Vec2::from_angle(vru_heading) * vru_speed),
    }
}

/// Result of the brute-force risk-time oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleRt {
    pub rt: Option<f64>,
    /// Same search, but requiring both agents to be in overlap cells at
    /// that instant instead of inside the arc and radius envelopes. Only
    /// differs when the overlap has parts with a gap between them.
    pub rt_cellwise: Option<f64>,
    /// Number of grid cells found in the overlap.
    pub cells: usize,
}

/// Brute-force risk time.
///
/// The overlap of corridor and reachable region is rasterized on a grid of
/// spacing `cell`. Time is then stepped at 10 ms: the vehicle covers arc
/// lengths `[v t, v t + L]`, the VRU covers distances `[u t, u t + l]` from
/// its start. The risk time is the first step at which both slabs meet the
/// envelope `[min, max]` of overlap cell arcs and radii.
pub fn rt_oracle(scene: &PairScene, params: &RiskParams, cell: f64) -> OracleRt {
    let half_width = scene.ego_meta.width / 2.0;
    let vru = &scene.vru_state;
    let phi = match scene.vru_meta.class {
        AgentClass::Pedestrian => params.phi_pedestrian,
        _ => params.phi_bicycle,
    };
    let stationary = vru.speed < params.v_stationary;
    let reach = vru.speed * params.horizon;
    let in_region = |p: Vec2| -> bool {
        if stationary {
            let q = (p - vru.position).rotate(-vru.heading);
            q.x.abs() <= scene.vru_meta.length / 2.0 && q.y.abs() <= scene.vru_meta.width / 2.0
        } else {
            let d = p - vru.position;
            if d.norm() > reach {
                return false;
            }
            let ang = d.y.atan2(d.x) - vru.heading;
            let ang = (ang + PI).rem_euclid(TAU) - PI;
            ang.abs() <= phi
        }
    };
    let (clo, chi) = scene.path.bbox(half_width);
    let rr = if stationary {
        scene.vru_meta.length.hypot(scene.vru_meta.width)
    } else {
        reach
    };
    let lo = Vec2::new(
        clo.x.max(vru.position.x - rr),
        clo.y.max(vru.position.y - rr),
    );
    let hi = Vec2::new(
        chi.x.min(vru.position.x + rr),
        chi.y.min(vru.position.y + rr),
    );

    let mut arcs = Vec::new();
    let mut radii = Vec::new();
    if lo.x < hi.x && lo.y < hi.y {
        let nx = ((hi.x - lo.x) / cell).ceil() as usize;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize;
        for i in 0..nx {
            for j in 0..ny {
                let p = lo + Vec2::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
                if !in_region(p) {
                    continue;
                }
                if let Some(s) = scene.path.corridor_arc(p, half_width) {
                    arcs.push(s);
                    radii.push(p.distance(vru.position));
                }
            }
        }
    }
    let cells = arcs.len();
    if cells == 0 {
        return OracleRt {
            rt: None,
            rt_cellwise: None,
            cells,
        };
    }
    arcs.sort_by(f64::total_cmp);
    radii.sort_by(f64::total_cmp);
    let any_in = |sorted: &[f64], a: f64, b: f64| {
        let i = sorted.partition_point(|&x| x < a);
        i < sorted.len() && sorted[i] <= b
    };
    let v = scene.ego_state.speed;
    let l_av = scene.ego_meta.length;
    let u = vru.speed;
    let l_vru = scene.vru_meta.length;
    let steps = (params.horizon / 0.01).round() as usize;
    let first = |av_in: &dyn Fn(f64, f64) -> bool, vru_in: &dyn Fn(f64, f64) -> bool| {
        (0..=steps).map(|k| k as f64 * 0.01).find(|&t| {
            let av = v > params.v_stationary && av_in(v * t, v * t + l_av);
            let vr = stationary || vru_in(u * t, u * t + l_vru);
            av && vr
        })
    };
    let envelope = |sorted: &[f64]| {
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        move |a: f64, b: f64| a <= hi && b >= lo
    };
    let (arc_env, radius_env) = (envelope(&arcs), envelope(&radii));
    OracleRt {
        rt: first(&arc_env, &radius_env),
        rt_cellwise: first(&|a, b| any_in(&arcs, a, b), &|a, b| any_in(&radii, a, b)),
        cells,
    }
}

/// Random scene for the sensor oracle: agent 1 is the ego at the origin.
pub fn random_sensor_scene(r: &mut ChaCha8Rng) -> Vec<(AgentMeta, KinematicState)> {
    let mut out = vec![(
        meta(1, AgentClass::Car, 4.5, 1.9),
        KinematicState::new(Vec2::ZERO, r.gen_range(0.0..TAU), Vec2::ZERO),
    )];
    let n = r.gen_range(6..16);
    let mut boxes: Vec<(Vec2, f64)> = vec![(Vec2::ZERO, 2.6)];
    let mut id = 2;
    let mut tries = 0;
    while out.len() < n && tries < 500 {
        tries += 1;
        let class = match r.gen_range(0..10) {
            0..=3 => AgentClass::Car,
            4 => AgentClass::TruckBus,
            5..=7 => AgentClass::Pedestrian,
            _ => AgentClass::Bicycle,
        };
        let (l, w): (f64, f64) = match class {
            AgentClass::Car => (r.gen_range(3.8..5.0), r.gen_range(1.7..2.0)),
            AgentClass::TruckBus => (r.gen_range(7.0..12.0), 2.5),
            AgentClass::Pedestrian => (0.5, 0.5),
            AgentClass::Bicycle => (2.0, 0.7),
        };
        let far = r.gen_bool(0.1);
        let dist = if far {
            r.gen_range(70.0..80.0)
        } else {
            r.gen_range(4.0..40.0)
        };
        let bearing = r.gen_range(0.0..TAU);
        let c = Vec2::from_angle(bearing) * dist;
        let radius = l.hypot(w) / 2.0;
        if boxes
            .iter()
            .any(|(p, rad)| p.distance(c) < rad + radius + 0.2)
        {
            continue;
        }
        boxes.push((c, radius));
        out.push((
            meta(id, class, l, w),
            KinematicState::new(c, r.gen_range(0.0..TAU), Vec2::ZERO),
        ));
        id += 1;
    }
    out
}

/// True when a point lies strictly inside the oriented box, by at least
/// `margin`.
fn strictly_inside(p: Vec2, state: &KinematicState, m: &AgentMeta, margin: f64) -> bool {
    let q = (p - state.position).rotate(-state.heading);
    q.x.abs() < m.length / 2.0 - margin && q.y.abs() < m.width / 2.0 - margin
}

/// Detection decisions by dense sampling along every sight line.
///
/// Each line from the ego centroid to an outline point is sampled every
/// `step` meters; it is blocked when a sample falls inside an occluder.
/// Returns the ids of detected agents in id order.
pub fn visibility_oracle(
    scene: &[(AgentMeta, KinematicState)],
    config: &SensorConfig,
    step: f64,
) -> Vec<AgentId> {
    let (ego_meta, ego_state) = &scene[0];
    let origin = ego_state.position;
    let mut seen = Vec::new();
    for (m, s) in &scene[1..] {
        let rect = vru_risk::geometry::oriented_box(s, m).unwrap();
        let (n, threshold, strict) = if m.class.is_vru() {
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
        let points = outline_points(&rect, n);
        let visible = points
            .iter()
            .filter(|&&p| {
                if origin.distance(p) > config.max_range {
                    return false;
                }
                let len = origin.distance(p);
                let k = (len / step).ceil() as usize;
                !scene.iter().any(|(om, os)| {
                    if om.agent_id == ego_meta.agent_id || om.agent_id == m.agent_id {
                        return false;
                    }
                    if om.class.is_vru() && !config.vrus_occlude {
                        return false;
                    }
                    // only sample where the line can meet this occluder
                    let reach = om.length.hypot(om.width) / 2.0;
                    (1..k).any(|i| {
                        let q = origin.lerp(p, i as f64 / k as f64);
                        q.distance(os.position) <= reach && strictly_inside(q, os, om, 1e-9)
                    })
                })
            })
            .count();
        let fraction = visible as f64 / points.len() as f64;
        let detected = if strict {
            fraction > threshold
        } else {
            fraction >= threshold
        };
        if detected {
            seen.push(m.agent_id);
        }
    }
    seen
}

/// Reference quantile: sort, then interpolate linearly between the order
/// statistics at rank `p (n - 1)`.
pub fn reference_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p * (v.len() - 1) as f64;
    let below = rank.floor() as usize;
    let above = rank.ceil() as usize;
    let frac = rank - below as f64;
    v[below] + frac * (v[above] - v[below])
}

/// Population mean and standard deviation, summed in sorted order.
pub fn reference_mean_stdev(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
