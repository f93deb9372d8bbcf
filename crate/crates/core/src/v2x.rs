//! CAM/CPM exchange between connected vehicles and the local environment
//! model (LEM) each vehicle maintains.
//!
//! The channel is ideal: every message sent at frame `n` reaches every other
//! CAV at frame `n + 1`, with no loss and no range limit.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AgentId, AgentMeta, Frame, KinematicState};
use crate::error::{Error, Result};
use crate::sensing::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Sensed,
    V2x,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemEntry {
    pub state: KinematicState,
    pub source: Source,
    /// Frame at which the state was observed by whoever sensed it.
    pub last_update_frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEnvModel {
    owner: AgentId,
    entries: BTreeMap<AgentId, LemEntry>,
}

impl LocalEnvModel {
    pub fn new(owner: AgentId) -> Self {
        LocalEnvModel {
            owner,
            entries: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn get(&self, id: AgentId) -> Option<&LemEntry> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, &LemEntry)> {
        self.entries.iter().map(|(&id, e)| (id, e))
    }

    /// Inserts unless a same-id entry at least as fresh already exists.
    fn offer(&mut self, id: AgentId, entry: LemEntry) {
        if id == self.owner {
            return;
        }
        match self.entries.get(&id) {
            Some(old) if old.last_update_frame >= entry.last_update_frame => {}
            _ => {
                self.entries.insert(id, entry);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamMessage {
    pub sender_id: AgentId,
    pub sender_state: KinematicState,
    pub sent_frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub agent_id: AgentId,
    pub state: KinematicState,
    pub last_observed_frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmMessage {
    pub sender_id: AgentId,
    pub sent_frame: Frame,
    pub perceived: Vec<PerceivedObject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum V2xMessage {
    Cam(CamMessage),
    Cpm(CpmMessage),
}

impl V2xMessage {
    pub fn sender(&self) -> AgentId {
        match self {
            V2xMessage::Cam(m) => m.sender_id,
            V2xMessage::Cpm(m) => m.sender_id,
        }
    }

    pub fn sent_frame(&self) -> Frame {
        match self {
            V2xMessage::Cam(m) => m.sent_frame,
            V2xMessage::Cpm(m) => m.sent_frame,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenetrationAssignment {
    pub rate: f64,
    pub seed: u64,
    pub cav_ids: BTreeSet<AgentId>,
}

impl PenetrationAssignment {
    pub fn is_cav(&self, id: AgentId) -> bool {
        self.cav_ids.contains(&id)
    }
}

/// Picks `round(rate · N)` of the vehicles as CAVs.
///
/// Ids are sorted, shuffled with a ChaCha generator seeded by `seed`, and the
/// first `round(rate · N)` are taken, so for a fixed seed a higher rate always
/// yields a superset of the CAVs chosen at a lower rate. VRUs in the input are
/// ignored.
pub fn assign_cavs(vehicles: &[AgentMeta], rate: f64, seed: u64) -> Result<PenetrationAssignment> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "penetration rate {rate} outside [0, 1]"
        )));
    }
    let mut ids: Vec<AgentId> = vehicles
        .iter()
        .filter(|m| m.class.is_vehicle())
        .map(|m| m.agent_id)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let count = (rate * ids.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    Ok(PenetrationAssignment {
        rate,
        seed,
        cav_ids: ids.into_iter().take(count).collect(),
    })
}

/// CAM with the sender's own state and CPM with its LEM contents.
///
/// With `relay_full_lem` unset the CPM carries only objects the sender
/// sensed itself.
pub fn generate_messages(
    cav: AgentId,
    lem: &LocalEnvModel,
    state: &KinematicState,
    frame: Frame,
    relay_full_lem: bool,
) -> (CamMessage, CpmMessage) {
    let perceived = lem
        .iter()
        .filter(|(id, e)| *id != cav && (relay_full_lem || e.source == Source::Sensed))
        .map(|(agent_id, e)| PerceivedObject {
            agent_id,
            state: e.state,
            last_observed_frame: e.last_update_frame,
        })
        .collect();
    (
        CamMessage {
            sender_id: cav,
            sender_state: *state,
            sent_frame: frame,
        },
        CpmMessage {
            sender_id: cav,
            sent_frame: frame,
            perceived,
        },
    )
}

pub type Inboxes = BTreeMap<AgentId, Vec<V2xMessage>>;

/// Routes messages sent in one frame to every CAV except the sender.
/// Non-CAVs get no inbox.
pub fn deliver(messages: &[V2xMessage], cav_ids: &BTreeSet<AgentId>) -> Inboxes {
    let mut sorted: Vec<&V2xMessage> = messages.iter().collect();
    sorted.sort_by_key(|m| (m.sender(), matches!(m, V2xMessage::Cpm(_))));
    cav_ids
        .iter()
        .map(|&cav| {
            let inbox = sorted
                .iter()
                .filter(|m| m.sender() != cav)
                .map(|&m| m.clone())
                .collect();
            (cav, inbox)
        })
        .collect()
}

/// Holds the messages of one frame until they become receivable.
#[derive(Debug, Default)]
pub struct Channel {
    in_flight: Option<(Frame, Vec<V2xMessage>)>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, frame: Frame, messages: Vec<V2xMessage>) {
        self.in_flight = Some((frame, messages));
    }

    /// Inboxes receivable at `frame`: only messages sent at `frame - 1`.
    pub fn receive(&mut self, frame: Frame, cav_ids: &BTreeSet<AgentId>) -> Inboxes {
        match self.in_flight.take() {
            Some((sent, msgs)) if sent + 1 == frame => deliver(&msgs, cav_ids),
            Some(other) if other.0 >= frame => {
                self.in_flight = Some(other);
                Inboxes::new()
            }
            _ => Inboxes::new(),
        }
    }
}

/// Updates `lem` for `frame` from own detections and received messages.
///
/// Own detections overwrite. Received objects only replace entries observed
/// strictly earlier. Entries older than `expiry` frames are dropped.
pub fn fuse(
    lem: &mut LocalEnvModel,
    detections: &[Detection],
    inbox: &[V2xMessage],
    frame: Frame,
    expiry: u32,
) {
    for d in detections {
        if d.agent_id == lem.owner {
            continue;
        }
        lem.entries.insert(
            d.agent_id,
            LemEntry {
                state: d.observed_state,
                source: Source::Sensed,
                last_update_frame: d.frame,
            },
        );
    }
    let fresh = |f: Frame| f <= frame && frame - f <= expiry;
    for msg in inbox {
        match msg {
            V2xMessage::Cam(cam) if fresh(cam.sent_frame) => lem.offer(
                cam.sender_id,
                LemEntry {
                    state: cam.sender_state,
                    source: Source::V2x,
                    last_update_frame: cam.sent_frame,
                },
            ),
            V2xMessage::Cpm(cpm) => {
                for o in cpm
                    .perceived
                    .iter()
                    .filter(|o| fresh(o.last_observed_frame))
                {
                    lem.offer(
                        o.agent_id,
                        LemEntry {
                            state: o.state,
                            source: Source::V2x,
                            last_update_frame: o.last_observed_frame,
                        },
                    );
                }
            }
            _ => {}
        }
    }
    lem.entries
        .retain(|_, e| e.last_update_frame <= frame && frame - e.last_update_frame <= expiry);
}
