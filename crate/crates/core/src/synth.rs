//! Built-in synthetic recordings for tests and demos.
//!
//! Agents follow polyline routes at constant speed, optionally waiting at
//! the start of the route before departing.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{AgentClass, AgentId, AgentMeta, Frame, KinematicState, Recording, Track};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const FRAME_RATE: f64 = 25.0;

/// Polyline parameterized by arc length.
#[derive(Debug, Clone)]
pub struct Route {
    points: Vec<Vec2>,
    arcs: Vec<f64>,
}

impl Route {
    pub fn new(points: Vec<Vec2>) -> Result<Route> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last().is_none_or(|q: &Vec2| q.distance(p) > 1e-9) {
                pts.push(p);
            }
        }
        if pts.is_empty() {
            return Err(Error::DegenerateGeometry("route without points".into()));
        }
        let mut arcs = vec![0.0];
        for w in pts.windows(2) {
            arcs.push(arcs.last().unwrap() + w[0].distance(w[1]));
        }
        Ok(Route { points: pts, arcs })
    }

    /// A single point, for parked or waiting agents.
    pub fn fixed(p: Vec2) -> Route {
        Route {
            points: vec![p],
            arcs: vec![0.0],
        }
    }

    pub fn length(&self) -> f64 {
        *self.arcs.last().unwrap()
    }

    /// Position and travel direction at arc length `s` (clamped).
    pub fn at(&self, s: f64) -> (Vec2, f64) {
        if self.points.len() == 1 {
            return (self.points[0], 0.0);
        }
        let s = s.clamp(0.0, self.length());
        let i = match self.arcs.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => (i - 1).min(self.points.len() - 2),
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.arcs[i + 1] - self.arcs[i];
        let d = b - a;
        (a.lerp(b, (s - self.arcs[i]) / seg), d.y.atan2(d.x))
    }

    pub fn rotated(&self, angle: f64) -> Route {
        Route {
            points: self.points.iter().map(|p| p.rotate(angle)).collect(),
            arcs: self.arcs.clone(),
        }
    }
}

/// Quarter-turn arc points from `from` around `center`, sweeping `sweep`
/// radians (positive is counterclockwise).
fn arc(center: Vec2, from: Vec2, sweep: f64) -> Vec<Vec2> {
    let steps = 18;
    (1..=steps)
        .map(|k| center + (from - center).rotate(sweep * k as f64 / steps as f64))
        .collect()
}

/// How an agent moves over its lifetime.
#[derive(Debug, Clone)]
pub struct Motion {
    pub route: Route,
    pub speed: f64,
    /// Seconds after appearing before the agent starts moving.
    pub wait: f64,
    /// Heading while the route is a single point.
    pub fixed_heading: f64,
}

#[derive(Debug)]
pub struct SceneBuilder {
    recording_id: u32,
    location_id: u32,
    frame_count: u32,
    tracks: Vec<Track>,
    next_id: u32,
}

impl SceneBuilder {
    pub fn new(recording_id: u32, location_id: u32, frame_count: u32) -> Self {
        SceneBuilder {
            recording_id,
            location_id,
            frame_count,
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    /// Adds an agent that appears at `appear` and leaves when its route
    /// ends or the recording does. Returns its id.
    pub fn add(
        &mut self,
        class: AgentClass,
        length: f64,
        width: f64,
        appear: Frame,
        motion: Motion,
    ) -> AgentId {
        let id = AgentId(self.next_id);
        self.next_id += 1;
        let moving = motion.route.points.len() > 1 && motion.speed > 0.0;
        let travel = if moving {
            motion.route.length() / motion.speed
        } else {
            f64::INFINITY
        };
        let last_t = motion.wait + travel;
        let mut states = Vec::new();
        let mut f = appear;
        while f < self.frame_count {
            let t = (f - appear) as f64 / FRAME_RATE;
            if t > last_t + 1e-9 {
                break;
            }
            let s = if moving {
                motion.speed * (t - motion.wait).max(0.0)
            } else {
                0.0
            };
            let (pos, dir) = motion.route.at(s);
            let heading = if moving { dir } else { motion.fixed_heading };
            let going = moving && t >= motion.wait && s < motion.route.length() - 1e-9;
            let v = if going {
                Vec2::from_angle(heading) * motion.speed
            } else {
                Vec2::ZERO
            };
            states.push(KinematicState::new(pos, heading, v));
            f += 1;
        }
        if !states.is_empty() {
            self.tracks.push(Track {
                meta: AgentMeta {
                    agent_id: id,
                    class,
                    length,
                    width,
                    initial_frame: appear,
                    final_frame: appear + states.len() as u32 - 1,
                },
                states,
            });
        }
        id
    }

    pub fn add_parked(&mut self, length: f64, width: f64, center: Vec2, heading: f64) -> AgentId {
        self.add(
            AgentClass::Car,
            length,
            width,
            0,
            Motion {
                route: Route::fixed(center),
                speed: 0.0,
                wait: 0.0,
                fixed_heading: heading,
            },
        )
    }

    pub fn build(self) -> Result<Recording> {
        Recording::new(
            self.recording_id,
            self.location_id,
            FRAME_RATE,
            Some(self.frame_count),
            self.tracks,
        )
    }
}

/// Ids of the agents in [`occlusion_scene`].
#[derive(Debug, Clone, Copy)]
pub struct OcclusionIds {
    pub ego: AgentId,
    pub helper: AgentId,
    pub parked: AgentId,
    pub pedestrian: AgentId,
}

/// Eastbound vehicle approaching a pedestrian who steps out from behind a
/// parked car. A second vehicle waits on the far side of the road with a
/// clear view of the pedestrian.
pub fn occlusion_scene(recording_id: u32) -> Result<(Recording, OcclusionIds)> {
    let mut b = SceneBuilder::new(recording_id, 1, 400);
    let ego = b.add(
        AgentClass::Car,
        4.5,
        1.9,
        0,
        Motion {
            route: Route::new(vec![Vec2::new(-70.0, -1.75), Vec2::new(80.0, -1.75)])?,
            speed: 8.0,
            wait: 0.0,
            fixed_heading: 0.0,
        },
    );
    let helper = b.add_parked(4.5, 1.9, Vec2::new(34.0, 1.75), PI);
    let parked = b.add_parked(4.6, 1.9, Vec2::new(20.0, -4.5), 0.0);
    let pedestrian = b.add(
        AgentClass::Pedestrian,
        0.5,
        0.5,
        0,
        Motion {
            route: Route::new(vec![Vec2::new(24.0, -5.5), Vec2::new(24.0, 8.0)])?,
            speed: 1.4,
            wait: 8.0,
            fixed_heading: FRAC_PI_2,
        },
    );
    Ok((
        b.build()?,
        OcclusionIds {
            ego,
            helper,
            parked,
            pedestrian,
        },
    ))
}

/// One vehicle and one pedestrian whose paths cross in plain view.
pub fn crossing_scene(recording_id: u32) -> Result<Recording> {
    let mut b = SceneBuilder::new(recording_id, 1, 250);
    b.add(
        AgentClass::Car,
        4.5,
        1.9,
        0,
        Motion {
            route: Route::new(vec![Vec2::new(-40.0, 0.0), Vec2::new(60.0, 0.0)])?,
            speed: 9.0,
            wait: 0.0,
            fixed_heading: 0.0,
        },
    );
    b.add(
        AgentClass::Pedestrian,
        0.5,
        0.5,
        0,
        Motion {
            route: Route::new(vec![Vec2::new(25.0, -8.0), Vec2::new(25.0, 8.0)])?,
            speed: 1.3,
            wait: 0.0,
            fixed_heading: FRAC_PI_2,
        },
    );
    b.build()
}

const ARM: f64 = 70.0;
const LANE: f64 = 1.75;
const PARKING: f64 = 4.5;
const SIDEWALK: f64 = 7.0;

/// Vehicle routes approaching from the west; other arms are rotations.
fn vehicle_route(kind: u8) -> Result<Route> {
    let start = Vec2::new(-ARM, -LANE);
    match kind {
        0 => Route::new(vec![start, Vec2::new(ARM, -LANE)]),
        1 => {
            let r = 6.0;
            let center = Vec2::new(-LANE - r, -LANE - r);
            let entry = Vec2::new(-LANE - r, -LANE);
            let mut pts = vec![start, entry];
            pts.extend(arc(center, entry, -FRAC_PI_2));
            pts.push(Vec2::new(-LANE, -ARM));
            Route::new(pts)
        }
        _ => {
            let r = 8.0;
            let center = Vec2::new(LANE - r, -LANE + r);
            let entry = Vec2::new(LANE - r, -LANE);
            let mut pts = vec![start, entry];
            pts.extend(arc(center, entry, FRAC_PI_2));
            pts.push(Vec2::new(LANE, ARM));
            Route::new(pts)
        }
    }
}

/// Four-arm intersection with parked cars along the curbs, through and
/// turning traffic, pedestrians crossing at crosswalks and mid-block, and
/// cyclists. Layout and timing are drawn from `seed`.
pub fn intersection_scene(recording_id: u32, seed: u64) -> Result<Recording> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = 750;
    let mut b = SceneBuilder::new(recording_id, 2, frames);
    let quarter = |arm: u32| arm as f64 * FRAC_PI_2;

    // parked cars on both curbs of every arm, leaving the corner clear
    for arm in 0..4 {
        for side in [-1.0, 1.0] {
            let mut x = -ARM + 8.0 + rng.gen_range(0.0..6.0);
            while x < -14.0 {
                if rng.gen_bool(0.45) {
                    let len = rng.gen_range(4.2..5.0);
                    let c = Vec2::new(x, side * PARKING).rotate(quarter(arm));
                    let heading = if side < 0.0 { 0.0 } else { PI } + quarter(arm);
                    b.add_parked(len, 1.9, c, heading);
                }
                x += rng.gen_range(6.0..11.0);
            }
        }
    }

    let n_vehicles = rng.gen_range(10..=14);
    for _ in 0..n_vehicles {
        let arm = rng.gen_range(0..4);
        let kind = rng.gen_range(0..3u8);
        let route = vehicle_route(kind)?.rotated(quarter(arm));
        let (len, width) = if rng.gen_bool(0.1) {
            (9.0, 2.5)
        } else {
            (4.5, 1.9)
        };
        let class = if len > 6.0 {
            AgentClass::TruckBus
        } else {
            AgentClass::Car
        };
        let appear = rng.gen_range(0..frames - 150);
        b.add(
            class,
            len,
            width,
            appear,
            Motion {
                route,
                speed: rng.gen_range(6.0..10.0),
                wait: 0.0,
                fixed_heading: 0.0,
            },
        );
    }

    let n_peds = rng.gen_range(8..=14);
    for _ in 0..n_peds {
        let arm = rng.gen_range(0..4);
        let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let x = if rng.gen_bool(0.5) {
            -10.0
        } else {
            rng.gen_range(-45.0..-16.0)
        };
        let along = rng.gen_range(2.0..8.0);
        let pts = vec![
            Vec2::new(x - along, -dir * SIDEWALK),
            Vec2::new(x, -dir * SIDEWALK),
            Vec2::new(x, dir * SIDEWALK),
            Vec2::new(x + rng.gen_range(-6.0..6.0), dir * SIDEWALK),
        ];
        let route = Route::new(pts)?.rotated(quarter(arm));
        b.add(
            AgentClass::Pedestrian,
            0.5,
            0.5,
            rng.gen_range(0..frames - 200),
            Motion {
                route,
                speed: rng.gen_range(1.1..1.7),
                wait: rng.gen_range(0.0..3.0),
                fixed_heading: 0.0,
            },
        );
    }

    let n_bikes = rng.gen_range(2..=4);
    for _ in 0..n_bikes {
        let arm = rng.gen_range(0..4);
        let route =
            Route::new(vec![Vec2::new(-ARM, -3.1), Vec2::new(ARM, -3.1)])?.rotated(quarter(arm));
        b.add(
            AgentClass::Bicycle,
            2.0,
            0.7,
            rng.gen_range(0..frames - 150),
            Motion {
                route,
                speed: rng.gen_range(4.0..6.5),
                wait: 0.0,
                fixed_heading: 0.0,
            },
        );
    }
    b.build()
}
