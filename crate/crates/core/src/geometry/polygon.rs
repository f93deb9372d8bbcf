use super::{point_segment_distance, Aabb, Vec2, AREA_EPS, EPS};
use crate::dataset::{AgentMeta, KinematicState};
use crate::error::{Error, Result};

/// Simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    bbox: Aabb,
}

impl Polygon {
    /// Validates and normalizes the ring to counterclockwise order.
    ///
    /// Repeated consecutive vertices (and a closing vertex equal to the first)
    /// are dropped before validation.
    pub fn new(vertices: Vec<Vec2>) -> Result<Polygon> {
        let mut vertices = dedup_ring(vertices);
        if vertices.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        let area = signed_area(&vertices);
        if area.abs() <= AREA_EPS {
            return Err(Error::DegenerateGeometry(format!(
                "polygon has zero area ({area:e})"
            )));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if self_intersects(&vertices) {
            return Err(Error::DegenerateGeometry(
                "polygon is self-intersecting".into(),
            ));
        }
        Ok(Self::from_ccw(vertices))
    }

    /// Builds from a ring already known to be simple, CCW and non-degenerate.
    pub(crate) fn from_ccw(vertices: Vec<Vec2>) -> Polygon {
        debug_assert!(vertices.len() >= 3);
        let bbox = Aabb::from_points(&vertices).expect("non-empty ring");
        Polygon { vertices, bbox }
    }

    /// Rectangle centered at `center`, long side along `heading`.
    pub fn rectangle(center: Vec2, heading: f64, length: f64, width: f64) -> Result<Polygon> {
        if !(length > EPS && width > EPS) {
            return Err(Error::DegenerateGeometry(format!(
                "rectangle with non-positive extent {length} x {width}"
            )));
        }
        let fwd = Vec2::from_angle(heading) * (length / 2.0);
        let left = Vec2::from_angle(heading).perp() * (width / 2.0);
        Ok(Self::from_ccw(vec![
            center - fwd - left,
            center + fwd - left,
            center + fwd + left,
            center - fwd + left,
        ]))
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        c * (1.0 / (3.0 * a2))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -EPS
        })
    }

    /// Closed containment: boundary points (within tolerance) count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        self.on_boundary(p) || self.crossing_parity(p)
    }

    /// Open containment: points within tolerance of the boundary are outside.
    pub fn contains_strict(&self, p: Vec2) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        !self.on_boundary(p) && self.crossing_parity(p)
    }

    pub fn on_boundary(&self, p: Vec2) -> bool {
        self.edges()
            .any(|(a, b)| point_segment_distance(p, a, b).0 <= EPS)
    }

    pub fn translated(&self, by: Vec2) -> Polygon {
        Self::from_ccw(self.vertices.iter().map(|&v| v + by).collect())
    }

    fn crossing_parity(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Footprint of an agent: its length × width box at its current pose.
pub fn oriented_box(state: &KinematicState, meta: &AgentMeta) -> Result<Polygon> {
    Polygon::rectangle(state.position, state.heading, meta.length, meta.width)
}

pub(crate) fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

pub(crate) fn dedup_ring(mut v: Vec<Vec2>) -> Vec<Vec2> {
    v.dedup_by(|a, b| a.distance(*b) <= EPS);
    while v.len() > 1 && v[0].distance(v[v.len() - 1]) <= EPS {
        v.pop();
    }
    v
}

fn self_intersects(v: &[Vec2]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_touch(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Closed segment intersection test with tolerance.
pub(crate) fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    point_segment_distance(c, a, b).0 <= EPS
        || point_segment_distance(d, a, b).0 <= EPS
        || point_segment_distance(a, c, d).0 <= EPS
        || point_segment_distance(b, c, d).0 <= EPS
}
