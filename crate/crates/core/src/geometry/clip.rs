use super::polygon::{dedup_ring, signed_area};
use super::{Polygon, Vec2, AREA_EPS, EPS};

/// Intersection of two convex polygons (Sutherland–Hodgman).
///
/// Returns `None` when the overlap has no area (disjoint or touching).
pub fn clip_convex(subject: &Polygon, clip: &Polygon) -> Option<Polygon> {
    if !subject.bbox().overlaps(clip.bbox()) {
        return None;
    }
    let mut output: Vec<Vec2> = subject.vertices().to_vec();
    for (a, b) in clip.edges() {
        if output.is_empty() {
            return None;
        }
        let edge = b - a;
        let input = std::mem::take(&mut output);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let cur_side = edge.cross(cur - a);
            let prev_side = edge.cross(prev - a);
            let cur_in = cur_side >= -EPS * edge.norm();
            let prev_in = prev_side >= -EPS * edge.norm();
            if cur_in {
                if !prev_in {
                    output.push(crossing(prev, cur, prev_side, cur_side));
                }
                output.push(cur);
            } else if prev_in {
                output.push(crossing(prev, cur, prev_side, cur_side));
            }
        }
    }
    let output = dedup_ring(output);
    if output.len() < 3 || signed_area(&output) <= AREA_EPS {
        return None;
    }
    Some(Polygon::from_ccw(output))
}

fn crossing(p: Vec2, q: Vec2, p_side: f64, q_side: f64) -> Vec2 {
    let denom = p_side - q_side;
    if denom.abs() <= f64::MIN_POSITIVE {
        return q;
    }
    p.lerp(q, p_side / denom)
}

/// Ear-clipping triangulation of a simple polygon. Convex input is returned
/// as-is.
pub fn triangulate(poly: &Polygon) -> Vec<Polygon> {
    if poly.is_convex() {
        return vec![poly.clone()];
    }
    let v = poly.vertices();
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut tris = Vec::with_capacity(v.len() - 2);
    let mut guard = 0;
    while idx.len() > 3 && guard < 4 * v.len() * v.len() {
        guard += 1;
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (v[ia], v[ib], v[ic]);
            if (b - a).cross(c - b) <= EPS {
                continue; // reflex or collinear
            }
            let blocked = idx
                .iter()
                .any(|&j| j != ia && j != ib && j != ic && in_triangle(v[j], a, b, c));
            if blocked {
                continue;
            }
            if signed_area(&[a, b, c]) > AREA_EPS {
                tris.push(Polygon::from_ccw(vec![a, b, c]));
            }
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            // only collinear leftovers remain
            break;
        }
    }
    if idx.len() == 3 {
        let tri = [v[idx[0]], v[idx[1]], v[idx[2]]];
        if signed_area(&tri) > AREA_EPS {
            tris.push(Polygon::from_ccw(tri.to_vec()));
        }
    }
    tris
}

fn in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    (b - a).cross(p - a) >= -EPS && (c - b).cross(p - b) >= -EPS && (a - c).cross(p - c) >= -EPS
}

/// Intersection of two simple polygons as a set of interior-disjoint convex
/// parts. An empty result means the inputs are disjoint or only touch.
pub fn intersect_regions(a: &Polygon, b: &Polygon) -> Vec<Polygon> {
    if !a.bbox().overlaps(b.bbox()) {
        return Vec::new();
    }
    if a.is_convex() && b.is_convex() {
        return clip_convex(a, b).into_iter().collect();
    }
    let ta = triangulate(a);
    let tb = triangulate(b);
    let mut out = Vec::new();
    for pa in &ta {
        for pb in &tb {
            if let Some(p) = clip_convex(pa, pb) {
                out.push(p);
            }
        }
    }
    out
}
