use super::{oriented_box, Aabb, DistanceWindow, Polygon, Vec2, EPS, MAX_ARC_STEP};
use crate::dataset::{AgentMeta, KinematicState, PlannedPath};
use crate::error::{Error, Result};

/// Spacing of boundary samples when projecting a region onto the centerline.
const PROJECTION_STEP: f64 = 0.2;

/// Centerline samples closer than this are merged.
const MIN_SEGMENT: f64 = 1e-6;

const CHUNK: usize = 8;

/// Centerline samples within this distance of a straight run are merged
/// into it.
const COLLINEAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: Vec2,
    dir: Vec2,
    len: f64,
    arc: f64,
}

/// Region swept by a vehicle along its planned path.
///
/// The region is stored as a cover of convex pieces: one rectangle per
/// centerline segment plus a wedge on the outer side of every turn. Their
/// union is the centerline buffered by `half_width` with flat end caps.
#[derive(Debug, Clone)]
pub struct Corridor {
    centerline: Vec<(f64, Vec2)>,
    segments: Vec<Segment>,
    chunk_boxes: Vec<Aabb>,
    half_width: f64,
    pieces: Vec<Polygon>,
    bbox: Aabb,
}

impl Corridor {
    /// `(arc_length, position)` samples after merging coincident points.
    pub fn centerline(&self) -> &[(f64, Vec2)] {
        &self.centerline
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn total_length(&self) -> f64 {
        self.centerline.last().map_or(0.0, |c| c.0)
    }

    pub fn pieces(&self) -> &[Polygon] {
        &self.pieces
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    /// True when the path had no extent and the corridor is the footprint.
    pub fn is_footprint(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.bbox.contains(p) && self.pieces.iter().any(|piece| piece.contains(p))
    }

    /// Arc length of the closest centerline point, clamped to the path.
    pub fn project(&self, p: Vec2) -> f64 {
        if self.segments.is_empty() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let mut best_arc = 0.0;
        for (c, bb) in self.chunk_boxes.iter().enumerate() {
            if box_distance(bb, p) >= best {
                continue;
            }
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(self.segments.len());
            for seg in &self.segments[lo..hi] {
                let t = (p - seg.start).dot(seg.dir).clamp(0.0, seg.len);
                let d = p.distance(seg.start + seg.dir * t);
                if d < best {
                    best = d;
                    best_arc = seg.arc + t;
                }
            }
        }
        best_arc.clamp(0.0, self.total_length())
    }

    /// Overlap of the corridor with a convex region, as convex parts.
    pub fn intersect_convex(&self, region: &Polygon) -> Vec<Polygon> {
        if !self.bbox.overlaps(region.bbox()) {
            return Vec::new();
        }
        self.pieces
            .iter()
            .filter(|piece| piece.bbox().overlaps(region.bbox()))
            .filter_map(|piece| super::clip_convex(piece, region))
            .collect()
    }
}

fn box_distance(bb: &Aabb, p: Vec2) -> f64 {
    let dx = (bb.min.x - p.x).max(0.0).max(p.x - bb.max.x);
    let dy = (bb.min.y - p.y).max(0.0).max(p.y - bb.max.y);
    dx.hypot(dy)
}

/// Buffers the planned path by half the vehicle width.
///
/// A path without extent (parked or stopped vehicle) yields the vehicle
/// footprint at its current pose.
pub fn build_corridor(
    path: &PlannedPath,
    state: &KinematicState,
    meta: &AgentMeta,
) -> Result<Corridor> {
    let half_width = meta.width / 2.0;
    if !(half_width > EPS) {
        return Err(Error::DegenerateGeometry(format!(
            "corridor for agent {} needs a positive width",
            meta.agent_id
        )));
    }

    let mut points: Vec<Vec2> = Vec::with_capacity(path.samples.len());
    for s in &path.samples {
        if points
            .last()
            .is_none_or(|last: &Vec2| last.distance(s.position) > MIN_SEGMENT)
        {
            points.push(s.position);
        }
    }
    if points.len() < 2 {
        let footprint = oriented_box(state, meta)?;
        let bbox = *footprint.bbox();
        let origin = points.first().copied().unwrap_or(state.position);
        return Ok(Corridor {
            centerline: vec![(0.0, origin)],
            segments: Vec::new(),
            chunk_boxes: Vec::new(),
            half_width,
            pieces: vec![footprint],
            bbox,
        });
    }

    let mut centerline = Vec::with_capacity(points.len());
    let mut arc = 0.0;
    centerline.push((0.0, points[0]));
    for w in points.windows(2) {
        arc += w[0].distance(w[1]);
        centerline.push((arc, w[1]));
    }

    // runs of collinear samples become one segment
    let mut segments: Vec<Segment> = Vec::new();
    let mut run_start = 0;
    for k in 1..points.len() {
        let next = points.get(k + 1);
        let extend = next.is_some_and(|&n| {
            let a = points[run_start];
            let d = n - a;
            let len = d.norm();
            (run_start + 1..=k).all(|j| {
                let q = points[j] - a;
                (d.cross(q) / len).abs() <= COLLINEAR_TOL && q.dot(d) > 0.0
            }) && (points[k] - a).norm() < len
        });
        if extend {
            continue;
        }
        let (a, b) = (points[run_start], points[k]);
        let d = b - a;
        let len = d.norm();
        segments.push(Segment {
            start: a,
            dir: d * (1.0 / len),
            len,
            arc: centerline[run_start].0,
        });
        run_start = k;
    }

    let mut pieces = Vec::with_capacity(2 * segments.len());
    for (i, seg) in segments.iter().enumerate() {
        let n = seg.dir.perp() * half_width;
        let end = seg.start + seg.dir * seg.len;
        pieces.push(Polygon::from_ccw(vec![
            seg.start - n,
            end - n,
            end + n,
            seg.start + n,
        ]));
        if let Some(next) = segments.get(i + 1) {
            if let Some(w) = join_wedge(end, seg.dir, next.dir, half_width) {
                pieces.push(w);
            }
        }
    }

    let bbox = pieces
        .iter()
        .map(|p| *p.bbox())
        .reduce(|a, b| a.union(&b))
        .expect("at least one segment");
    let chunk_boxes = segments
        .chunks(CHUNK)
        .map(|chunk| {
            let pts: Vec<Vec2> = chunk
                .iter()
                .flat_map(|s| [s.start, s.start + s.dir * s.len])
                .collect();
            Aabb::from_points(&pts).expect("non-empty chunk")
        })
        .collect();

    Ok(Corridor {
        centerline,
        segments,
        chunk_boxes,
        half_width,
        pieces,
        bbox,
    })
}

/// Fills the gap on the outer side of a turn at `v`.
fn join_wedge(v: Vec2, d_in: Vec2, d_out: Vec2, w: f64) -> Option<Polygon> {
    let turn = d_in.cross(d_out).atan2(d_in.dot(d_out));
    if turn.abs() < 1e-9 {
        return None;
    }
    // outer side is to the right of a left turn and vice versa
    let (from, sweep) = if turn > 0.0 {
        (-d_in.perp(), turn)
    } else {
        (d_out.perp(), -turn)
    };
    let from_angle = from.y.atan2(from.x);
    let n = ((sweep / MAX_ARC_STEP).ceil() as usize).max(1);
    let mut ring = Vec::with_capacity(n + 2);
    ring.push(v);
    for k in 0..=n {
        ring.push(v + Vec2::from_angle(from_angle + sweep * k as f64 / n as f64) * w);
    }
    let ring = super::polygon::dedup_ring(ring);
    if ring.len() < 3 {
        return None;
    }
    let poly = Polygon::from_ccw(ring);
    (poly.area() > super::AREA_EPS).then_some(poly)
}

/// Along-path extent of `region` on the corridor centerline.
///
/// Each part is projected through its vertices and boundary points spaced
/// at most 0.2 m apart. Returns `None` for an empty region.
pub fn corridor_distance_window(corridor: &Corridor, region: &[Polygon]) -> Option<DistanceWindow> {
    if region.is_empty() {
        return None;
    }
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for part in region {
        for (a, b) in part.edges() {
            let len = a.distance(b);
            let n = ((len / PROJECTION_STEP).ceil() as usize).max(1);
            for k in 0..n {
                let s = corridor.project(a.lerp(b, k as f64 / n as f64));
                d_min = d_min.min(s);
                d_max = d_max.max(s);
            }
        }
    }
    Some(DistanceWindow::new(d_min, d_max))
}
