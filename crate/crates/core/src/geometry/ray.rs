use super::{Aabb, Polygon, Vec2, EPS};

/// Line-of-sight test from `origin` to `target`.
///
/// Returns true iff the target is within `max_range` and the open segment
/// between the two points does not pass through the interior of any
/// obstacle. Grazing a corner or running along an edge does not block.
pub fn cast_ray(origin: Vec2, target: Vec2, obstacles: &[Polygon], max_range: f64) -> bool {
    if origin.distance(target) > max_range {
        return false;
    }
    !obstacles.iter().any(|o| segment_blocked(origin, target, o))
}

/// True when the open segment `(a, b)` enters the interior of `poly`.
pub fn segment_blocked(a: Vec2, b: Vec2, poly: &Polygon) -> bool {
    let seg_box = Aabb::from_points(&[a, b]).expect("two points");
    if !seg_box.overlaps(poly.bbox()) {
        return false;
    }
    let ab = b - a;
    let len = ab.norm();
    if len <= EPS {
        return false;
    }
    let mut ts: Vec<f64> = vec![0.0, 1.0];
    for (c, d) in poly.edges() {
        let cd = d - c;
        let denom = ab.cross(cd);
        let ac = c - a;
        if denom.abs() > EPS * len * cd.norm() {
            let t = ac.cross(cd) / denom;
            let u = ac.cross(ab) / denom;
            if (-EPS..=1.0 + EPS).contains(&u) && t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        } else if ac.cross(ab).abs() <= EPS * len {
            // collinear edge: its endpoints split the segment
            for p in [c, d] {
                let t = (p - a).dot(ab) / (len * len);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .any(|w| (w[1] - w[0]) * len > EPS && poly.contains_strict(a + ab * ((w[0] + w[1]) / 2.0)))
}

/// [`segment_blocked`] for a convex polygon, without allocating.
///
/// Clips the segment against every edge's half-plane shrunk inward by
/// `EPS`, so touching the boundary never counts as entering.
pub fn segment_blocked_convex(a: Vec2, b: Vec2, poly: &Polygon) -> bool {
    let seg_box = Aabb::from_points(&[a, b]).expect("two points");
    if !seg_box.overlaps(poly.bbox()) {
        return false;
    }
    let len = a.distance(b);
    if len <= EPS {
        return false;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for (c, d) in poly.edges() {
        let e = d - c;
        let el = e.norm();
        let s0 = e.cross(a - c) / el - EPS;
        let s1 = e.cross(b - c) / el - EPS;
        if s0 <= 0.0 && s1 <= 0.0 {
            return false;
        }
        if s0 <= 0.0 {
            lo = lo.max(s0 / (s0 - s1));
        } else if s1 <= 0.0 {
            hi = hi.min(s0 / (s0 - s1));
        }
        if (hi - lo) * len <= EPS {
            return false;
        }
    }
    true
}
