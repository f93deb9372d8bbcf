//! Frame-synchronous replay loop and penetration-rate sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    discover_recordings, load_recording_with, AgentId, AgentView, Frame, Recording, RecordingFiles,
    VruDimensions,
};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::risk::{
    ear, evaluate_pair, AvTiming, EgoContext, EventContext, PairTracker, RiskEvent, RiskParams,
};
use crate::sensing::{Detection, SensorConfig, SensorScene};
use crate::v2x::{
    assign_cavs, fuse, generate_messages, Channel, LocalEnvModel, PenetrationAssignment, V2xMessage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Recording ids to run. Empty means every recording found.
    pub recordings: Vec<u32>,
    pub penetration_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub risk: RiskParams,
    pub sensor: SensorConfig,
    pub lem_expiry: u32,
    pub relay_full_lem: bool,
    pub vru_dimensions: VruDimensions,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the rayon default. Never affects results.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            recordings: Vec::new(),
            penetration_rates: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seeds: vec![0],
            risk: RiskParams::default(),
            sensor: SensorConfig::default(),
            lem_expiry: 12,
            relay_full_lem: true,
            vru_dimensions: VruDimensions::default(),
            output_dir: None,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.penetration_rates.is_empty() {
            return Err(Error::Config(
                "at least one penetration rate is required".into(),
            ));
        }
        if let Some(r) = self
            .penetration_rates
            .iter()
            .find(|r| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::Config(format!(
                "penetration rate {r} outside [0, 1]"
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.risk.validate()?;
        self.sensor.validate()
    }

    /// Hash of everything that can change the output of one run.
    pub fn run_hash(&self, recording_id: u32, rate: f64, seed: u64) -> String {
        #[derive(Serialize)]
        struct Effective<'a> {
            recording_id: u32,
            rate: f64,
            seed: u64,
            risk: &'a RiskParams,
            sensor: &'a SensorConfig,
            lem_expiry: u32,
            relay_full_lem: bool,
            vru_dimensions: &'a VruDimensions,
        }
        let doc = serde_json::to_vec(&Effective {
            recording_id,
            rate,
            seed,
            risk: &self.risk,
            sensor: &self.sensor,
            lem_expiry: self.lem_expiry,
            relay_full_lem: self.relay_full_lem,
            vru_dimensions: &self.vru_dimensions,
        })
        .expect("config serializes");
        hex::encode(&Sha256::digest(&doc)[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarSample {
    pub frame: Frame,
    pub ego_id: AgentId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub recording_id: u32,
    pub location_id: u32,
    pub rate: f64,
    pub seed: u64,
    pub config_hash: String,
    pub frame_rate: f64,
    pub frame_count: u32,
    pub duration_s: f64,
    pub vehicle_count: usize,
    pub vru_count: usize,
    pub cav_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub meta: RunMeta,
    pub events: Vec<RiskEvent>,
    pub ear_samples: Vec<EarSample>,
}

/// One run, stepped a frame at a time.
pub struct Simulation<'a> {
    recording: &'a Recording,
    config: &'a SimConfig,
    assignment: PenetrationAssignment,
    lems: BTreeMap<AgentId, LocalEnvModel>,
    channel: Channel,
    tracker: PairTracker,
    next_frame: Frame,
    events: Vec<RiskEvent>,
    ear_samples: Vec<EarSample>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        recording: &'a Recording,
        rate: f64,
        seed: u64,
        config: &'a SimConfig,
    ) -> Result<Self> {
        config.validate()?;
        let metas: Vec<_> = recording.tracks().iter().map(|t| t.meta.clone()).collect();
        Ok(Simulation {
            recording,
            config,
            assignment: assign_cavs(&metas, rate, seed)?,
            lems: BTreeMap::new(),
            channel: Channel::new(),
            tracker: PairTracker::new(),
            next_frame: 0,
            events: Vec::new(),
            ear_samples: Vec::new(),
        })
    }

    pub fn assignment(&self) -> &PenetrationAssignment {
        &self.assignment
    }

    /// The next frame `step` will process.
    pub fn next_frame(&self) -> Frame {
        self.next_frame
    }

    pub fn lem(&self, vehicle: AgentId) -> Option<&LocalEnvModel> {
        self.lems.get(&vehicle)
    }

    pub fn events(&self) -> &[RiskEvent] {
        &self.events
    }

    /// Processes one frame. Returns false once the recording is exhausted.
    pub fn step(&mut self) -> Result<bool> {
        let frame = self.next_frame;
        if frame >= self.recording.frame_count() {
            return Ok(false);
        }
        self.step_frame(frame).map_err(|e| Error::Frame {
            frame,
            source: Box::new(e),
        })?;
        self.next_frame += 1;
        Ok(true)
    }

    fn step_frame(&mut self, frame: Frame) -> Result<()> {
        let rec = self.recording;
        let cfg = self.config;
        let agents = rec.agents_at(frame)?;
        let scene = SensorScene::new(&agents)?;
        let vehicles: Vec<AgentView<'_>> = agents
            .iter()
            .copied()
            .filter(|a| a.meta.class.is_vehicle())
            .collect();

        let detections: Vec<Vec<Detection>> = vehicles
            .par_iter()
            .map(|v| scene.sense(v.meta.agent_id, &cfg.sensor, frame))
            .collect();

        // messages sent last frame become receivable now
        let mut inboxes = self.channel.receive(frame, &self.assignment.cav_ids);
        let present: BTreeSet<AgentId> = vehicles.iter().map(|v| v.meta.agent_id).collect();
        self.lems.retain(|id, _| present.contains(id));
        for (v, dets) in vehicles.iter().zip(&detections) {
            let id = v.meta.agent_id;
            let lem = self
                .lems
                .entry(id)
                .or_insert_with(|| LocalEnvModel::new(id));
            let inbox = inboxes.remove(&id).unwrap_or_default();
            fuse(lem, dets, &inbox, frame, cfg.lem_expiry);
        }

        let mut outgoing = Vec::new();
        for v in vehicles
            .iter()
            .filter(|v| self.assignment.is_cav(v.meta.agent_id))
        {
            let id = v.meta.agent_id;
            let (cam, cpm) =
                generate_messages(id, &self.lems[&id], v.state, frame, cfg.relay_full_lem);
            outgoing.push(V2xMessage::Cam(cam));
            outgoing.push(V2xMessage::Cpm(cpm));
        }
        self.channel.send(frame, outgoing);

        let vrus: Vec<(AgentId, Vec2)> = agents
            .iter()
            .filter(|a| a.meta.class.is_vru())
            .map(|a| (a.meta.agent_id, a.state.position))
            .collect();
        for v in &vehicles {
            let id = v.meta.agent_id;
            if let Some(value) = ear(
                &self.lems[&id],
                &vrus,
                v.state.position,
                cfg.risk.ear_radius,
            ) {
                self.ear_samples.push(EarSample {
                    frame,
                    ego_id: id,
                    value,
                });
            }
        }

        let lems = &self.lems;
        let assessed: Vec<Vec<(AgentId, Vec2, f64)>> = vehicles
            .par_iter()
            .map(|v| assess_vehicle(rec, &cfg.risk, &lems[&v.meta.agent_id], *v, frame))
            .collect::<Result<_>>()?;

        for (v, pairs) in vehicles.iter().zip(assessed) {
            for (vru_id, vru_position, rt) in pairs {
                let ctx = EventContext {
                    ego_position: v.state.position,
                    vru_position,
                    penetration_rate: self.assignment.rate,
                    seed: self.assignment.seed,
                    recording_id: rec.recording_id(),
                    location_id: rec.location_id(),
                };
                if let Some(event) = self.tracker.update_pair(
                    v.meta.agent_id,
                    vru_id,
                    true,
                    rt,
                    frame,
                    &ctx,
                    &cfg.risk,
                )? {
                    self.events.push(event);
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> RunResult {
        let rec = self.recording;
        RunResult {
            meta: RunMeta {
                recording_id: rec.recording_id(),
                location_id: rec.location_id(),
                rate: self.assignment.rate,
                seed: self.assignment.seed,
                config_hash: self.config.run_hash(
                    rec.recording_id(),
                    self.assignment.rate,
                    self.assignment.seed,
                ),
                frame_rate: rec.frame_rate(),
                frame_count: rec.frame_count(),
                duration_s: rec.duration_s(),
                vehicle_count: rec.vehicle_count(),
                vru_count: rec.vru_count(),
                cav_count: self.assignment.cav_ids.len(),
            },
            events: self.events,
            ear_samples: self.ear_samples,
        }
    }
}

/// Risk time for every VRU in the ego's LEM, using the LEM's state of it.
fn assess_vehicle(
    rec: &Recording,
    params: &RiskParams,
    lem: &LocalEnvModel,
    ego: AgentView<'_>,
    frame: Frame,
) -> Result<Vec<(AgentId, Vec2, f64)>> {
    let known: Vec<_> = lem
        .iter()
        .filter_map(|(id, e)| {
            rec.meta(id)
                .filter(|m| m.class.is_vru())
                .map(|m| (m, e.state))
        })
        .collect();
    if known.is_empty() {
        return Ok(Vec::new());
    }
    let parked =
        params.av_timing == AvTiming::CurrentSpeed && ego.state.speed <= params.v_stationary;
    if parked {
        return Ok(known
            .into_iter()
            .map(|(m, s)| (m.agent_id, s.position, params.rt_infinity))
            .collect());
    }
    let path = rec.planned_path(ego.meta.agent_id, frame, params.horizon)?;
    let ctx = EgoContext::new(ego.meta.clone(), *ego.state, path)?;
    known
        .into_iter()
        .map(|(m, s)| {
            let e = evaluate_pair(&ctx, m, &s, params)?;
            Ok((m.agent_id, s.position, e.risk_time))
        })
        .collect()
}

/// Replays `recording` once at the given penetration rate and seed.
pub fn run(recording: &Recording, rate: f64, seed: u64, config: &SimConfig) -> Result<RunResult> {
    let mut sim = Simulation::new(recording, rate, seed, config)?;
    while sim.step()? {}
    Ok(sim.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub recording_id: u32,
    pub rate: f64,
    pub seed: u64,
    pub message: String,
    pub data_error: bool,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub results: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
}

/// Runs every recording at every configured rate and seed. Failed runs are
/// collected and do not stop the others.
pub fn sweep(recordings: &[Recording], config: &SimConfig) -> Result<SweepOutcome> {
    let inputs: Vec<(u32, std::result::Result<&Recording, String>)> = recordings
        .iter()
        .map(|r| (r.recording_id(), Ok(r)))
        .collect();
    sweep_inputs(&inputs, config)
}

/// Loads the selected recordings from `dir` and sweeps them. A recording
/// that fails to load counts as a failure for each of its runs.
pub fn sweep_dir(dir: &Path, config: &SimConfig) -> Result<SweepOutcome> {
    let ids = if config.recordings.is_empty() {
        discover_recordings(dir)?
    } else {
        config.recordings.clone()
    };
    if ids.is_empty() {
        return Err(Error::EmptyInput("no recordings selected"));
    }
    let loaded: Vec<(u32, std::result::Result<Recording, Error>)> = ids
        .par_iter()
        .map(|&id| {
            let files = RecordingFiles::in_dir(dir, id);
            (id, load_recording_with(&files, &config.vru_dimensions))
        })
        .collect();
    let mut data_failed = BTreeSet::new();
    let inputs: Vec<(u32, std::result::Result<&Recording, String>)> = loaded
        .iter()
        .map(|(id, r)| {
            let r = r.as_ref().map_err(|e| {
                if e.is_data_error() {
                    data_failed.insert(*id);
                }
                e.chain()
            });
            (*id, r)
        })
        .collect();
    let mut out = sweep_inputs(&inputs, config)?;
    for f in &mut out.failures {
        f.data_error |= data_failed.contains(&f.recording_id);
    }
    Ok(out)
}

fn sweep_inputs(
    inputs: &[(u32, std::result::Result<&Recording, String>)],
    config: &SimConfig,
) -> Result<SweepOutcome> {
    config.validate()?;
    let jobs: Vec<(usize, f64, u64)> = (0..inputs.len())
        .flat_map(|i| {
            config
                .penetration_rates
                .iter()
                .flat_map(move |&r| config.seeds.iter().map(move |&s| (i, r, s)))
        })
        .collect();
    let outcomes: Vec<std::result::Result<RunResult, RunFailure>> = jobs
        .par_iter()
        .map(|&(i, rate, seed)| {
            let (id, input) = &inputs[i];
            let fail = |message: String, data_error: bool| RunFailure {
                recording_id: *id,
                rate,
                seed,
                message,
                data_error,
            };
            let rec = input.as_ref().map_err(|m| fail(m.clone(), false))?;
            log::info!("run recording {id} rate {rate} seed {seed}");
            run(rec, rate, seed, config).map_err(|e| fail(e.chain(), e.is_data_error()))
        })
        .collect();
    let mut out = SweepOutcome::default();
    for o in outcomes {
        match o {
            Ok(r) => out.results.push(r),
            Err(f) => {
                log::error!(
                    "recording {} rate {} seed {} failed: {}",
                    f.recording_id,
                    f.rate,
                    f.seed,
                    f.message
                );
                out.failures.push(f)
            }
        }
    }
    Ok(out)
}

/// Runs `f` on a pool with the configured thread count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
