//! Trajectory recordings in the inD CSV layout.
//!
//! A recording is three files: `XX_tracks.csv` (one row per agent and frame),
//! `XX_tracksMeta.csv` (one row per agent) and `XX_recordingMeta.csv`.
//! Headings are stored in degrees on disk and converted to radians on load.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, normalize_angle, Vec2};

pub type Frame = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Car,
    TruckBus,
    Bicycle,
    Pedestrian,
}

impl AgentClass {
    pub fn is_vru(self) -> bool {
        matches!(self, AgentClass::Bicycle | AgentClass::Pedestrian)
    }

    pub fn is_vehicle(self) -> bool {
        !self.is_vru()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentClass::Car => "car",
            AgentClass::TruckBus => "truck_bus",
            AgentClass::Bicycle => "bicycle",
            AgentClass::Pedestrian => "pedestrian",
        }
    }

    pub fn parse(s: &str) -> Option<AgentClass> {
        match s.trim() {
            "car" => Some(AgentClass::Car),
            "truck_bus" | "truck" | "bus" => Some(AgentClass::TruckBus),
            "bicycle" => Some(AgentClass::Bicycle),
            "pedestrian" => Some(AgentClass::Pedestrian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub agent_id: AgentId,
    pub class: AgentClass,
    pub length: f64,
    pub width: f64,
    pub initial_frame: Frame,
    pub final_frame: Frame,
}

/// Pose and velocity of an agent at one frame. Heading is in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub position: Vec2,
    pub speed: f64,
    pub heading: f64,
    pub velocity: Vec2,
}

impl KinematicState {
    pub fn new(position: Vec2, heading: f64, velocity: Vec2) -> Self {
        KinematicState {
            position,
            speed: velocity.norm(),
            heading: normalize_angle(heading),
            velocity,
        }
    }
}

/// Footprint used for VRUs the dataset ships without dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VruDimensions {
    pub pedestrian_length: f64,
    pub pedestrian_width: f64,
    pub bicycle_length: f64,
    pub bicycle_width: f64,
}

impl Default for VruDimensions {
    fn default() -> Self {
        VruDimensions {
            pedestrian_length: 0.5,
            pedestrian_width: 0.5,
            bicycle_length: 2.0,
            bicycle_width: 0.7,
        }
    }
}

impl VruDimensions {
    fn apply(&self, meta: &mut AgentMeta) {
        let (l, w) = match meta.class {
            AgentClass::Pedestrian => (self.pedestrian_length, self.pedestrian_width),
            AgentClass::Bicycle => (self.bicycle_length, self.bicycle_width),
            _ => return,
        };
        if !(meta.length > 0.0) {
            meta.length = l;
        }
        if !(meta.width > 0.0) {
            meta.width = w;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub meta: AgentMeta,
    /// One state per frame in `initial_frame..=final_frame`.
    pub states: Vec<KinematicState>,
}

impl Track {
    pub fn state_at(&self, frame: Frame) -> Option<&KinematicState> {
        if frame < self.meta.initial_frame || frame > self.meta.final_frame {
            return None;
        }
        self.states.get((frame - self.meta.initial_frame) as usize)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub meta: &'a AgentMeta,
    pub state: &'a KinematicState,
}

/// Immutable recording of all agents in one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    recording_id: u32,
    location_id: u32,
    frame_rate: f64,
    frame_count: u32,
    tracks: Vec<Track>,
    by_id: HashMap<AgentId, usize>,
    frame_index: Vec<Vec<u32>>,
}

impl Recording {
    /// Validates the tracks and builds the per-frame index.
    ///
    /// `frame_count` defaults to one past the last final frame.
    pub fn new(
        recording_id: u32,
        location_id: u32,
        frame_rate: f64,
        frame_count: Option<u32>,
        mut tracks: Vec<Track>,
    ) -> Result<Recording> {
        if !(frame_rate > 0.0) {
            return Err(Error::Recording(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        tracks.sort_by_key(|t| t.meta.agent_id);
        let mut by_id = HashMap::with_capacity(tracks.len());
        let mut last_frame = None;
        for (i, t) in tracks.iter().enumerate() {
            let m = &t.meta;
            let err = |message: String| Error::Integrity {
                agent: m.agent_id,
                message,
            };
            if by_id.insert(m.agent_id, i).is_some() {
                return Err(err("duplicate track id".into()));
            }
            if m.final_frame < m.initial_frame {
                return Err(err(format!(
                    "final frame {} precedes initial frame {}",
                    m.final_frame, m.initial_frame
                )));
            }
            let expected = (m.final_frame - m.initial_frame + 1) as usize;
            if t.states.len() != expected {
                return Err(err(format!(
                    "expected {expected} states for frames {}..={}, found {}",
                    m.initial_frame,
                    m.final_frame,
                    t.states.len()
                )));
            }
            if !(m.length >= 0.0 && m.width >= 0.0) {
                return Err(err("negative dimensions".into()));
            }
            if m.class.is_vehicle() && !(m.length > 0.0 && m.width > 0.0) {
                return Err(err(format!(
                    "{} needs positive dimensions, got {} x {}",
                    m.class.as_str(),
                    m.length,
                    m.width
                )));
            }
            last_frame = last_frame.max(Some(m.final_frame));
        }
        let needed = last_frame.map_or(0, |f| f + 1);
        let frame_count = frame_count.unwrap_or(needed);
        if frame_count < needed {
            return Err(Error::Recording(format!(
                "frame count {frame_count} is shorter than the last track frame {}",
                needed - 1
            )));
        }
        let mut frame_index = vec![Vec::new(); frame_count as usize];
        for (i, t) in tracks.iter().enumerate() {
            for f in t.meta.initial_frame..=t.meta.final_frame {
                frame_index[f as usize].push(i as u32);
            }
        }
        Ok(Recording {
            recording_id,
            location_id,
            frame_rate,
            frame_count,
            tracks,
            by_id,
            frame_index,
        })
    }

    pub fn recording_id(&self) -> u32 {
        self.recording_id
    }

    pub fn location_id(&self) -> u32 {
        self.location_id
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frame_count(&self) -> u32 {
        self.frame_count
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.frame_rate
    }

    /// Tracks sorted by agent id.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: AgentId) -> Option<&Track> {
        self.by_id.get(&id).map(|&i| &self.tracks[i])
    }

    pub fn meta(&self, id: AgentId) -> Option<&AgentMeta> {
        self.track(id).map(|t| &t.meta)
    }

    pub fn vehicle_count(&self) -> usize {
        self.tracks
            .iter()
            .filter(|t| t.meta.class.is_vehicle())
            .count()
    }

    pub fn vru_count(&self) -> usize {
        self.tracks.iter().filter(|t| t.meta.class.is_vru()).count()
    }

    /// Agents present at `frame`, in id order.
    pub fn agents_at(&self, frame: Frame) -> Result<Vec<AgentView<'_>>> {
        let idx = self
            .frame_index
            .get(frame as usize)
            .ok_or(Error::FrameOutOfBounds {
                frame,
                frame_count: self.frame_count,
            })?;
        Ok(idx
            .iter()
            .map(|&i| {
                let t = &self.tracks[i as usize];
                AgentView {
                    meta: &t.meta,
                    state: &t.states[(frame - t.meta.initial_frame) as usize],
                }
            })
            .collect())
    }

    /// Future trajectory of `agent` from `frame`, up to `horizon` seconds or
    /// the end of the track, whichever comes first.
    pub fn planned_path(&self, agent: AgentId, frame: Frame, horizon: f64) -> Result<PlannedPath> {
        let track = self
            .track(agent)
            .filter(|t| t.state_at(frame).is_some())
            .ok_or(Error::AgentNotPresent { agent, frame })?;
        let want = (horizon * self.frame_rate + 1e-9).floor().max(0.0) as u32;
        let steps = want.min(track.meta.final_frame - frame);
        let start = (frame - track.meta.initial_frame) as usize;
        let mut samples = Vec::with_capacity(steps as usize + 1);
        let mut arc = 0.0;
        let mut prev = track.states[start].position;
        for k in 0..=steps as usize {
            let position = track.states[start + k].position;
            arc += position.distance(prev);
            prev = position;
            samples.push(PathSample {
                time_offset: k as f64 / self.frame_rate,
                position,
                arc_length: arc,
            });
        }
        Ok(PlannedPath {
            horizon: steps as f64 / self.frame_rate,
            samples,
        })
    }

    /// Frames whose displacement from the previous frame exceeds
    /// `(speed + 2 m/s) / frame_rate`, using the larger of the two speeds.
    pub fn displacement_violations(&self) -> Vec<(AgentId, Frame)> {
        let mut out = Vec::new();
        for t in &self.tracks {
            for (k, w) in t.states.windows(2).enumerate() {
                let limit = (w[0].speed.max(w[1].speed) + 2.0) / self.frame_rate;
                if w[0].position.distance(w[1].position) > limit + 1e-9 {
                    out.push((t.meta.agent_id, t.meta.initial_frame + k as u32 + 1));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub time_offset: f64,
    pub position: Vec2,
    pub arc_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub samples: Vec<PathSample>,
    /// Time covered by the samples, in seconds.
    pub horizon: f64,
}

impl PlannedPath {
    pub fn total_length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.arc_length)
    }

    /// Time at which the path first reaches `arc`, interpolated between
    /// samples. `None` if the path never gets that far.
    pub fn time_at_arc(&self, arc: f64) -> Option<f64> {
        let first = self.samples.first()?;
        if arc <= first.arc_length {
            return Some(first.time_offset);
        }
        self.samples.windows(2).find_map(|w| {
            if arc <= w[1].arc_length {
                let span = w[1].arc_length - w[0].arc_length;
                let f = if span > 0.0 {
                    (arc - w[0].arc_length) / span
                } else {
                    0.0
                };
                Some(w[0].time_offset + f * (w[1].time_offset - w[0].time_offset))
            } else {
                None
            }
        })
    }
}

/// Paths of the three files that make up one recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingFiles {
    pub tracks: PathBuf,
    pub tracks_meta: PathBuf,
    pub recording_meta: PathBuf,
}

impl RecordingFiles {
    /// Standard inD names (`01_tracks.csv` …) inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>, recording_id: u32) -> Self {
        let dir = dir.as_ref();
        RecordingFiles {
            tracks: dir.join(format!("{recording_id:02}_tracks.csv")),
            tracks_meta: dir.join(format!("{recording_id:02}_tracksMeta.csv")),
            recording_meta: dir.join(format!("{recording_id:02}_recordingMeta.csv")),
        }
    }
}

/// Recording ids for which `dir` holds a `XX_tracks.csv`, ascending.
pub fn discover_recordings(dir: impl AsRef<Path>) -> Result<Vec<u32>> {
    let dir = dir.as_ref();
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(prefix) = name.strip_suffix("_tracks.csv") {
            if let Ok(id) = prefix.parse::<u32>() {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

pub fn load_recording(
    tracks_path: impl AsRef<Path>,
    tracks_meta_path: impl AsRef<Path>,
    recording_meta_path: impl AsRef<Path>,
) -> Result<Recording> {
    load_recording_with(
        &RecordingFiles {
            tracks: tracks_path.as_ref().to_path_buf(),
            tracks_meta: tracks_meta_path.as_ref().to_path_buf(),
            recording_meta: recording_meta_path.as_ref().to_path_buf(),
        },
        &VruDimensions::default(),
    )
}

pub fn load_recording_with(files: &RecordingFiles, dims: &VruDimensions) -> Result<Recording> {
    let (recording_id, location_id, frame_rate, num_frames) =
        read_recording_meta(&files.recording_meta)?;
    let metas = read_tracks_meta(&files.tracks_meta)?;
    let rows = read_tracks(&files.tracks)?;

    let mut tracks = Vec::with_capacity(metas.len());
    let mut heading_warnings = 0usize;
    let mut rows = rows;
    for (id, mut meta) in metas {
        let mut agent_rows = rows.remove(&id).unwrap_or_default();
        agent_rows.sort_by_key(|r| r.frame);
        let integrity = |message: String| Error::Integrity { agent: id, message };
        for (k, r) in agent_rows.iter().enumerate() {
            let expected = meta.initial_frame + k as u32;
            if r.frame != expected {
                return Err(integrity(format!(
                    "non-contiguous frames: expected frame {expected}, found {}",
                    r.frame
                )));
            }
        }
        match agent_rows.last() {
            Some(last) if last.frame == meta.final_frame => {}
            Some(last) => {
                return Err(integrity(format!(
                    "rows end at frame {} but meta says final frame {}",
                    last.frame, meta.final_frame
                )))
            }
            None => return Err(integrity("no rows in tracks file".into())),
        }
        if let Some(first) = agent_rows.first() {
            if !(meta.length > 0.0) {
                meta.length = first.length;
            }
            if !(meta.width > 0.0) {
                meta.width = first.width;
            }
        }
        dims.apply(&mut meta);
        let states = agent_rows
            .iter()
            .map(|r| {
                let state = KinematicState::new(
                    r.position,
                    r.heading_deg.rem_euclid(360.0).to_radians(),
                    r.velocity,
                );
                if state.speed > 0.1
                    && angle_diff(state.heading, r.velocity.y.atan2(r.velocity.x)).abs() > 0.2
                {
                    heading_warnings += 1;
                }
                state
            })
            .collect();
        tracks.push(Track { meta, states });
    }
    if let Some((&id, _)) = rows.iter().next() {
        return Err(Error::Integrity {
            agent: id,
            message: "track has rows but no entry in the tracks meta file".into(),
        });
    }
    if heading_warnings > 0 {
        log::warn!(
            "recording {recording_id}: {heading_warnings} rows with heading more than 0.2 rad off the velocity direction"
        );
    }
    Recording::new(recording_id, location_id, frame_rate, num_frames, tracks)
}

struct Row {
    frame: Frame,
    position: Vec2,
    heading_deg: f64,
    velocity: Vec2,
    width: f64,
    length: f64,
}

struct Columns<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            let h = h.trim().to_string();
            if index.insert(h.clone(), i).is_some() {
                return Err(Error::schema(path, format!("duplicate column `{h}`")));
            }
        }
        Ok(Columns { path, index })
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::schema(self.path, format!("missing column `{name}`")))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str> {
        rec.get(idx).map(str::trim).ok_or_else(|| {
            Error::schema(
                self.path,
                format!("line {}: missing value for `{name}`", line_of(rec)),
            )
        })
    }

    fn parse<T: std::str::FromStr>(
        &self,
        rec: &csv::StringRecord,
        idx: usize,
        name: &str,
    ) -> Result<T> {
        let raw = self.field(rec, idx, name)?;
        raw.parse().map_err(|_| {
            Error::schema(
                self.path,
                format!("line {}: cannot parse `{name}` value {raw:?}", line_of(rec)),
            )
        })
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn open_csv(path: &Path) -> Result<(csv::Reader<File>, csv::StringRecord)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    Ok((rdr, headers))
}

fn read_recording_meta(path: &Path) -> Result<(u32, u32, f64, Option<u32>)> {
    let (mut rdr, headers) = open_csv(path)?;
    let cols = Columns::new(path, &headers)?;
    let c_rec = cols.require("recordingId")?;
    let c_loc = cols.require("locationId")?;
    let c_rate = cols.require("frameRate")?;
    let c_frames = cols.optional("numFrames");
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| Error::schema(path, "no data row"))?
        .map_err(|e| Error::csv(path, e))?;
    let frames = match c_frames {
        Some(i) => Some(cols.parse(&rec, i, "numFrames")?),
        None => None,
    };
    Ok((
        cols.parse(&rec, c_rec, "recordingId")?,
        cols.parse(&rec, c_loc, "locationId")?,
        cols.parse(&rec, c_rate, "frameRate")?,
        frames,
    ))
}

fn read_tracks_meta(path: &Path) -> Result<BTreeMap<AgentId, AgentMeta>> {
    let (mut rdr, headers) = open_csv(path)?;
    let cols = Columns::new(path, &headers)?;
    let c_id = cols.require("trackId")?;
    let c_init = cols.require("initialFrame")?;
    let c_final = cols.require("finalFrame")?;
    let c_class = cols.require("class")?;
    let c_width = cols.optional("width");
    let c_length = cols.optional("length");
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let agent_id = AgentId(cols.parse(&rec, c_id, "trackId")?);
        let raw_class = cols.field(&rec, c_class, "class")?;
        let class = AgentClass::parse(raw_class).ok_or_else(|| {
            Error::schema(
                path,
                format!("line {}: unknown class {raw_class:?}", line_of(&rec)),
            )
        })?;
        let width = match c_width {
            Some(i) => cols.parse(&rec, i, "width")?,
            None => 0.0,
        };
        let length = match c_length {
            Some(i) => cols.parse(&rec, i, "length")?,
            None => 0.0,
        };
        let meta = AgentMeta {
            agent_id,
            class,
            length,
            width,
            initial_frame: cols.parse(&rec, c_init, "initialFrame")?,
            final_frame: cols.parse(&rec, c_final, "finalFrame")?,
        };
        if meta.final_frame < meta.initial_frame {
            return Err(Error::Integrity {
                agent: agent_id,
                message: format!(
                    "final frame {} precedes initial frame {}",
                    meta.final_frame, meta.initial_frame
                ),
            });
        }
        if out.insert(agent_id, meta).is_some() {
            return Err(Error::Integrity {
                agent: agent_id,
                message: "duplicate entry in tracks meta".into(),
            });
        }
    }
    Ok(out)
}

fn read_tracks(path: &Path) -> Result<HashMap<AgentId, Vec<Row>>> {
    let (mut rdr, headers) = open_csv(path)?;
    let cols = Columns::new(path, &headers)?;
    let c_id = cols.require("trackId")?;
    let c_frame = cols.require("frame")?;
    let c_x = cols.require("xCenter")?;
    let c_y = cols.require("yCenter")?;
    let c_heading = cols.require("heading")?;
    let c_width = cols.require("width")?;
    let c_length = cols.require("length")?;
    let c_vx = cols.require("xVelocity")?;
    let c_vy = cols.require("yVelocity")?;
    cols.require("recordingId")?;

    let mut out: HashMap<AgentId, Vec<Row>> = HashMap::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(Error::csv(path, e)),
        }
        let id = AgentId(cols.parse(&rec, c_id, "trackId")?);
        let row = Row {
            frame: cols.parse(&rec, c_frame, "frame")?,
            position: Vec2::new(
                cols.parse(&rec, c_x, "xCenter")?,
                cols.parse(&rec, c_y, "yCenter")?,
            ),
            heading_deg: cols.parse(&rec, c_heading, "heading")?,
            velocity: Vec2::new(
                cols.parse(&rec, c_vx, "xVelocity")?,
                cols.parse(&rec, c_vy, "yVelocity")?,
            ),
            width: cols.parse(&rec, c_width, "width")?,
            length: cols.parse(&rec, c_length, "length")?,
        };
        out.entry(id).or_default().push(row);
    }
    Ok(out)
}

/// Writes `recording` as inD-style CSVs into `dir` with 6-decimal floats.
pub fn write_recording(dir: impl AsRef<Path>, recording: &Recording) -> Result<RecordingFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = RecordingFiles::in_dir(dir, recording.recording_id);
    let rid = recording.recording_id;

    write_file(&files.recording_meta, |w| {
        writeln!(
            w,
            "recordingId,locationId,frameRate,numFrames,duration,numTracks,numVehicles,numVRUs"
        )?;
        writeln!(
            w,
            "{rid},{},{:.6},{},{:.6},{},{},{}",
            recording.location_id,
            recording.frame_rate,
            recording.frame_count,
            recording.duration_s(),
            recording.tracks.len(),
            recording.vehicle_count(),
            recording.vru_count()
        )
    })?;

    write_file(&files.tracks_meta, |w| {
        writeln!(
            w,
            "recordingId,trackId,initialFrame,finalFrame,numFrames,width,length,class"
        )?;
        for t in &recording.tracks {
            let m = &t.meta;
            writeln!(
                w,
                "{rid},{},{},{},{},{:.6},{:.6},{}",
                m.agent_id,
                m.initial_frame,
                m.final_frame,
                m.final_frame - m.initial_frame + 1,
                m.width,
                m.length,
                m.class.as_str()
            )?;
        }
        Ok(())
    })?;

    write_file(&files.tracks, |w| {
        writeln!(
            w,
            "recordingId,trackId,frame,trackLifetime,xCenter,yCenter,heading,width,length,xVelocity,yVelocity"
        )?;
        for t in &recording.tracks {
            let m = &t.meta;
            for (k, s) in t.states.iter().enumerate() {
                writeln!(
                    w,
                    "{rid},{},{},{k},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    m.agent_id,
                    m.initial_frame + k as u32,
                    s.position.x,
                    s.position.y,
                    s.heading.to_degrees(),
                    m.width,
                    m.length,
                    s.velocity.x,
                    s.velocity.y
                )?;
            }
        }
        Ok(())
    })?;
    Ok(files)
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
