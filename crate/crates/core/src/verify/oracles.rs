//! Straightforward reference implementations, written independently of the code they
//! check.

use crate::sim2d::{Circle, Segment};

/// `(FR_m, FR_std^m, FR_std^s)` by explicit loops over raw counts.
pub fn homeostasis(counts: &[Vec<u64>], timesteps: &[u64]) -> (f64, f64, f64) {
    let p = counts.len() as f64;
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for (c, &t) in counts.iter().zip(timesteps) {
        let n = c.len() as f64;
        let mut m = 0.0;
        for &k in c {
            m += k as f64 / t as f64;
        }
        m /= n;
        let mut var = 0.0;
        for &k in c {
            let r = k as f64 / t as f64;
            var += (r - m) * (r - m);
        }
        means.push(m);
        stds.push((var / n).sqrt());
    }
    let fr_m = means.iter().sum::<f64>() / p;
    let fr_std_m = stds.iter().sum::<f64>() / p;
    let mut v = 0.0;
    for s in &stds {
        v += (s - fr_std_m) * (s - fr_std_m);
    }
    (fr_m, fr_std_m, (v / p).sqrt())
}

/// One SRM layer with static per-neuron thresholds, simulated for `t = 1..=steps` with a
/// double loop over neurons and past spikes. Returns the potential trace `v[t-1][i]`.
pub fn srm_layer(weights: &[Vec<f64>], inputs: &[Vec<usize>], theta: &[f64], steps: usize, tau_s: f64, tau_r: f64) -> Vec<Vec<f64>> {
    let eps = |lag: usize| {
        let x = lag as f64 / tau_s;
        x * (1.0 - x).exp()
    };
    let n = weights.len();
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut trace = Vec::with_capacity(steps);
    for t in 1..=steps {
        let mut v = vec![0.0; n];
        for i in 0..n {
            for (j, hist) in inputs.iter().enumerate() {
                for &tf in hist {
                    if tf <= t {
                        v[i] += weights[i][j] * eps(t - tf);
                    }
                }
            }
            for &tf in &own[i] {
                if tf < t {
                    v[i] += -2.0 * theta[i] * (-((t - 1 - tf) as f64) / tau_r).exp();
                }
            }
        }
        for i in 0..n {
            if v[i] >= theta[i] {
                own[i].push(t);
            }
        }
        trace.push(v);
    }
    trace
}

/// Distance along the unit direction `(dx, dy)` to a circle, by projecting the centre
/// onto the ray. The origin must lie outside the circle.
pub fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, c: &Circle) -> Option<f64> {
    let (cx, cy) = (c.x - ox, c.y - oy);
    let along = cx * dx + cy * dy;
    if along < 0.0 {
        return None;
    }
    let perp = cx * dy - cy * dx;
    let perp2 = perp * perp;
    if perp2 > c.r * c.r {
        return None;
    }
    Some(along - (c.r * c.r - perp2).max(0.0).sqrt())
}

/// Distance to a segment via the segment line's normal, then a bounds check on the hit.
pub fn ray_segment(ox: f64, oy: f64, dx: f64, dy: f64, s: &Segment) -> Option<f64> {
    let (ex, ey) = (s.x2 - s.x1, s.y2 - s.y1);
    let (nx, ny) = (-ey, ex);
    let denom = dx * nx + dy * ny;
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = ((s.x1 - ox) * nx + (s.y1 - oy) * ny) / denom;
    if t < 0.0 {
        return None;
    }
    let (hx, hy) = (ox + t * dx, oy + t * dy);
    let u = ((hx - s.x1) * ex + (hy - s.y1) * ey) / (ex * ex + ey * ey);
    (-1e-12..=1.0 + 1e-12).contains(&u).then_some(t)
}

/// Pose after `dt` of constant wheel speeds, integrated with `n` midpoint sub-steps.
pub fn kinematics(x: f64, y: f64, heading: f64, vl: f64, vr: f64, dt: f64, wheel_base: f64, n: usize) -> (f64, f64, f64) {
    let v = 0.5 * (vl + vr);
    let w = (vr - vl) / wheel_base;
    let h = dt / n as f64;
    let (mut x, mut y, mut th) = (x, y, heading);
    for _ in 0..n {
        let mid = th + 0.5 * w * h;
        x += v * mid.cos() * h;
        y += v * mid.sin() * h;
        th += w * h;
    }
    (x, y, th)
}

/// Shuttle position after `time`, from the distance travelled folded into `[0, 2L)`.
pub fn shuttle(ax: f64, ay: f64, bx: f64, by: f64, speed: f64, time: f64) -> (f64, f64) {
    let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    if len == 0.0 {
        return (ax, ay);
    }
    let travelled = speed * time;
    let folded = travelled - (2.0 * len) * (travelled / (2.0 * len)).floor();
    let u = if folded <= len { folded / len } else { 2.0 - folded / len };
    (ax + u * (bx - ax), ay + u * (by - ay))
}
