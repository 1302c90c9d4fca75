//! Ray and distance primitives.

use super::world::{Circle, Segment};

/// Distance along the unit ray `(ox, oy) + t·(dx, dy)` to the first circle crossing.
/// An origin inside the circle hits at `t = 0`.
pub fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, c: &Circle) -> Option<f64> {
    let (px, py) = (ox - c.x, oy - c.y);
    let b = dx * px + dy * py;
    let cc = px * px + py * py - c.r * c.r;
    if cc <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - cc;
    if disc < 0.0 || b >= 0.0 {
        // tangent-miss, or the circle is behind the origin
        return None;
    }
    // both roots positive; smaller one without cancellation
    let q = -b + disc.sqrt();
    Some(cc / q)
}

/// Distance along the unit ray to the segment, `None` when parallel or missed.
pub fn ray_segment(ox: f64, oy: f64, dx: f64, dy: f64, s: &Segment) -> Option<f64> {
    let (ex, ey) = (s.x2 - s.x1, s.y2 - s.y1);
    let denom = dx * ey - dy * ex;
    if denom.abs() < 1e-15 {
        return None;
    }
    let (wx, wy) = (s.x1 - ox, s.y1 - oy);
    let t = (wx * ey - wy * ex) / denom;
    let u = (wx * dy - wy * dx) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Euclidean distance from a point to a segment.
pub fn point_segment_distance(px: f64, py: f64, s: &Segment) -> f64 {
    let (ex, ey) = (s.x2 - s.x1, s.y2 - s.y1);
    let len2 = ex * ex + ey * ey;
    let u = if len2 > 0.0 { (((px - s.x1) * ex + (py - s.y1) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (s.x1 + u * ex, s.y1 + u * ey);
    (px - cx).hypot(py - cy)
}

/// Wraps an angle to `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
