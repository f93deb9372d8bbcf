//! Risk Factor pipeline.
//!
//! For a vehicle and a VRU the pipeline intersects the vehicle's swept
//! corridor with the VRU's reachable cone, converts the along-path and radial
//! extents of that overlap into time windows for both participants, takes
//! the earliest common instant as the risk time (RT) and maps it through
//! `sigmoid(α · (RT − τ))`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use serde::{Deserialize, Serialize};

use crate::dataset::{AgentClass, AgentId, AgentMeta, Frame, KinematicState, PlannedPath};
use crate::error::{Error, Result};
use crate::geometry::{
    build_cone, build_corridor, corridor_distance_window, oriented_box, radial_distance_window,
    Corridor, DistanceWindow, Polygon, Vec2, MAX_ARC_STEP,
};
use crate::v2x::LocalEnvModel;

/// How the vehicle's distance window is turned into time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AvTiming {
    /// Constant current speed.
    #[default]
    CurrentSpeed,
    /// Time parameterization of the planned path.
    PathTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskParams {
    pub alpha: f64,
    pub tau: f64,
    pub horizon: f64,
    pub phi_pedestrian: f64,
    pub phi_bicycle: f64,
    pub v_stationary: f64,
    pub rt_infinity: f64,
    pub ear_radius: f64,
    /// Frames without overlap after which a pair may record a new event.
    pub episode_reset_frames: u32,
    pub av_timing: AvTiming,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            alpha: -1.5,
            tau: 2.5,
            horizon: 5.0,
            phi_pedestrian: FRAC_PI_6,
            phi_bicycle: FRAC_PI_6 / 2.0,
            v_stationary: 0.1,
            rt_infinity: 1e6,
            ear_radius: 25.0,
            episode_reset_frames: 25,
            av_timing: AvTiming::CurrentSpeed,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("risk: {m}")));
        if !(self.alpha < 0.0) {
            return bad("alpha must be negative");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        for phi in [self.phi_pedestrian, self.phi_bicycle] {
            if !(phi > 0.0 && phi <= FRAC_PI_2) {
                return bad("cone half-angles must lie in (0, π/2]");
            }
        }
        if !(self.v_stationary >= 0.0) {
            return bad("v_stationary must be non-negative");
        }
        if !(self.rt_infinity > self.horizon) {
            return bad("rt_infinity must exceed the horizon");
        }
        if !(self.ear_radius > 0.0) {
            return bad("ear_radius must be positive");
        }
        Ok(())
    }

    pub fn half_angle(&self, class: AgentClass) -> f64 {
        match class {
            AgentClass::Pedestrian => self.phi_pedestrian,
            _ => self.phi_bicycle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
}

/// Converts a distance window to time for a participant of the given length
/// moving at `speed`. The start is clamped at zero.
pub fn time_window(d: DistanceWindow, speed: f64, participant_length: f64) -> TimeWindow {
    let t_min = ((d.d_min - participant_length) / speed).max(0.0);
    let t_max = d.d_max / speed;
    TimeWindow {
        t_min: t_min.min(t_max),
        t_max,
    }
}

/// Vehicle time window for the overlap region. Empty if there is no overlap
/// or the vehicle is stationary.
pub fn window_for_av(
    corridor: &Corridor,
    overlap: &[Polygon],
    av_speed: f64,
    av_length: f64,
    params: &RiskParams,
) -> Option<TimeWindow> {
    if av_speed <= params.v_stationary {
        return None;
    }
    let d = corridor_distance_window(corridor, overlap)?;
    Some(time_window(d, av_speed, av_length))
}

/// Vehicle time window read off the planned path's own timing: the vehicle
/// enters the window when its front reaches `d_min` and leaves when its
/// rear passes `d_max`.
pub fn window_for_av_path_time(
    corridor: &Corridor,
    overlap: &[Polygon],
    path: &PlannedPath,
    av_length: f64,
) -> Option<TimeWindow> {
    if path.total_length() <= 0.0 {
        return None;
    }
    let d = corridor_distance_window(corridor, overlap)?;
    let t_min = path.time_at_arc((d.d_min - av_length).max(0.0))?;
    let t_max = path.time_at_arc(d.d_max).unwrap_or(path.horizon);
    Some(TimeWindow {
        t_min: t_min.min(t_max),
        t_max,
    })
}

/// VRU time window for the overlap region.
///
/// A stationary VRU that overlaps the corridor at all is treated as present
/// for the whole horizon.
pub fn window_for_vru(
    vru_state: &KinematicState,
    vru_length: f64,
    overlap: &[Polygon],
    params: &RiskParams,
) -> Option<TimeWindow> {
    if overlap.is_empty() {
        return None;
    }
    if vru_state.speed < params.v_stationary {
        return Some(TimeWindow {
            t_min: 0.0,
            t_max: params.horizon,
        });
    }
    let d = radial_distance_window(vru_state.position, overlap)?;
    Some(time_window(d, vru_state.speed, vru_length))
}

/// Earliest instant in both windows, or `rt_infinity` if they are disjoint
/// or either is empty.
pub fn risk_time(t_av: Option<TimeWindow>, t_vru: Option<TimeWindow>, params: &RiskParams) -> f64 {
    match (t_av, t_vru) {
        (Some(a), Some(v)) => {
            let lo = a.t_min.max(v.t_min);
            let hi = a.t_max.min(v.t_max);
            if lo <= hi {
                lo
            } else {
                params.rt_infinity
            }
        }
        _ => params.rt_infinity,
    }
}

pub fn risk_factor(rt: f64, params: &RiskParams) -> f64 {
    1.0 / (1.0 + (-params.alpha * (rt - params.tau)).exp())
}

/// Everything about the ego vehicle that does not depend on the VRU.
#[derive(Debug, Clone)]
pub struct EgoContext {
    pub meta: AgentMeta,
    pub state: KinematicState,
    pub path: PlannedPath,
    pub corridor: Corridor,
}

impl EgoContext {
    pub fn new(meta: AgentMeta, state: KinematicState, path: PlannedPath) -> Result<Self> {
        let corridor = build_corridor(&path, &state, &meta)?;
        Ok(EgoContext {
            meta,
            state,
            path,
            corridor,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEvaluation {
    pub overlap: Vec<Polygon>,
    pub av_window: Option<TimeWindow>,
    pub vru_window: Option<TimeWindow>,
    pub risk_time: f64,
    pub risk_factor: f64,
}

/// Region a VRU may occupy within the horizon: its cone, or its footprint
/// when it stands still.
pub fn vru_region(
    vru_meta: &AgentMeta,
    vru_state: &KinematicState,
    params: &RiskParams,
) -> Result<Vec<Polygon>> {
    let cone = build_cone(
        vru_state,
        params.half_angle(vru_meta.class),
        params.horizon,
        params.v_stationary,
    );
    if cone.is_degenerate() {
        Ok(vec![oriented_box(vru_state, vru_meta)?])
    } else {
        Ok(cone.to_polygons(MAX_ARC_STEP))
    }
}

/// Full pipeline for one vehicle/VRU pair. `vru_state` is the state the
/// ego knows about, which may be a frame old when learned over V2X.
pub fn evaluate_pair(
    ego: &EgoContext,
    vru_meta: &AgentMeta,
    vru_state: &KinematicState,
    params: &RiskParams,
) -> Result<PairEvaluation> {
    let overlap: Vec<Polygon> = vru_region(vru_meta, vru_state, params)?
        .iter()
        .flat_map(|r| ego.corridor.intersect_convex(r))
        .collect();
    let av_window = match params.av_timing {
        AvTiming::CurrentSpeed => window_for_av(
            &ego.corridor,
            &overlap,
            ego.state.speed,
            ego.meta.length,
            params,
        ),
        AvTiming::PathTime => {
            window_for_av_path_time(&ego.corridor, &overlap, &ego.path, ego.meta.length)
        }
    };
    let vru_window = window_for_vru(vru_state, vru_meta.length, &overlap, params);
    let rt = risk_time(av_window, vru_window, params);
    Ok(PairEvaluation {
        overlap,
        av_window,
        vru_window,
        risk_time: rt,
        risk_factor: risk_factor(rt, params),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEvent {
    pub ego_id: AgentId,
    pub vru_id: AgentId,
    pub frame: Frame,
    pub ego_position: Vec2,
    pub vru_position: Vec2,
    pub risk_time: f64,
    pub risk_factor: f64,
    pub penetration_rate: f64,
    pub seed: u64,
    pub recording_id: u32,
    pub location_id: u32,
}

/// Run-level fields copied into every event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventContext {
    pub ego_position: Vec2,
    pub vru_position: Vec2,
    pub penetration_rate: f64,
    pub seed: u64,
    pub recording_id: u32,
    pub location_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairState {
    Unseen,
    TrackedNoOverlap,
    EventRecorded,
}

#[derive(Debug, Clone, Copy)]
struct PairRecord {
    state: PairState,
    last_frame: Frame,
    last_active: Option<Frame>,
}

/// Per-pair episode bookkeeping so each continuous risk episode is counted
/// once, at its first perceived frame.
#[derive(Debug, Default)]
pub struct PairTracker {
    pairs: HashMap<(AgentId, AgentId), PairRecord>,
}

impl PairTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self, ego: AgentId, vru: AgentId) -> PairState {
        self.pairs
            .get(&(ego, vru))
            .map_or(PairState::Unseen, |r| r.state)
    }

    /// Frames since the pair last had a perceived overlap.
    pub fn frames_since_overlap(&self, ego: AgentId, vru: AgentId, frame: Frame) -> Option<u32> {
        self.pairs
            .get(&(ego, vru))
            .and_then(|r| r.last_active)
            .map(|f| frame.saturating_sub(f))
    }

    /// Feeds one frame of a pair. Frames not reported for a pair count as
    /// frames without overlap.
    #[allow(clippy::too_many_arguments)]
    pub fn update_pair(
        &mut self,
        ego: AgentId,
        vru: AgentId,
        perceived: bool,
        rt: f64,
        frame: Frame,
        ctx: &EventContext,
        params: &RiskParams,
    ) -> Result<Option<RiskEvent>> {
        let rec = self.pairs.entry((ego, vru)).or_insert(PairRecord {
            state: PairState::Unseen,
            last_frame: frame,
            last_active: None,
        });
        if (rec.state != PairState::Unseen || rec.last_active.is_some()) && frame <= rec.last_frame
        {
            return Err(Error::Sequencing {
                ego,
                vru,
                frame,
                last: rec.last_frame,
            });
        }
        rec.last_frame = frame;
        let gap = params.episode_reset_frames;
        let active = perceived && rt < params.rt_infinity;
        if !active {
            let ended = rec.last_active.is_none_or(|la| frame - la >= gap);
            if ended && (perceived || rec.state == PairState::EventRecorded) {
                rec.state = PairState::TrackedNoOverlap;
            }
            return Ok(None);
        }
        let continuing = rec.state == PairState::EventRecorded
            && rec.last_active.is_some_and(|la| frame - la - 1 < gap);
        rec.last_active = Some(frame);
        if continuing {
            return Ok(None);
        }
        rec.state = PairState::EventRecorded;
        Ok(Some(RiskEvent {
            ego_id: ego,
            vru_id: vru,
            frame,
            ego_position: ctx.ego_position,
            vru_position: ctx.vru_position,
            risk_time: rt,
            risk_factor: risk_factor(rt, params),
            penetration_rate: ctx.penetration_rate,
            seed: ctx.seed,
            recording_id: ctx.recording_id,
            location_id: ctx.location_id,
        }))
    }
}

/// Environmental awareness ratio: share of the VRUs within `radius` of the
/// ego that its LEM knows about. `None` when no VRU is in range.
pub fn ear(
    lem: &LocalEnvModel,
    vrus_at_frame: &[(AgentId, Vec2)],
    ego_position: Vec2,
    radius: f64,
) -> Option<f64> {
    let nearby: Vec<AgentId> = vrus_at_frame
        .iter()
        .filter(|(id, p)| *id != lem.owner() && p.distance(ego_position) <= radius)
        .map(|(id, _)| *id)
        .collect();
    if nearby.is_empty() {
        return None;
    }
    let known = nearby.iter().filter(|id| lem.contains(**id)).count();
    Some(known as f64 / nearby.len() as f64)
}
