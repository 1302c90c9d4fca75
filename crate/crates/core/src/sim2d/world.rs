//! Arena geometry, dynamic obstacles and start/goal trials.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::point_segment_distance;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for Bounds {
    fn from(b: [f64; 4]) -> Self {
        Bounds { x_min: b[0], y_min: b[1], x_max: b[2], y_max: b[3] }
    }
}

impl From<Bounds> for [f64; 4] {
    fn from(b: Bounds) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl Bounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Distance from an interior point to the nearest edge; negative outside.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        (x - self.x_min).min(self.x_max - x).min(y - self.y_min).min(self.y_max - y)
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn edges(&self) -> [Segment; 4] {
        let Bounds { x_min, y_min, x_max, y_max } = *self;
        [
            Segment { x1: x_min, y1: y_min, x2: x_max, y2: y_min },
            Segment { x1: x_max, y1: y_min, x2: x_max, y2: y_max },
            Segment { x1: x_max, y1: y_max, x2: x_min, y2: y_max },
            Segment { x1: x_min, y1: y_max, x2: x_min, y2: y_min },
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Circle {
    /// Distance from a point to the circle surface; negative inside.
    pub fn surface_distance(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y) - self.r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Segment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for Segment {
    fn from(s: [f64; 4]) -> Self {
        Segment { x1: s[0], y1: s[1], x2: s[2], y2: s[3] }
    }
}

impl From<Segment> for [f64; 4] {
    fn from(s: Segment) -> Self {
        [s.x1, s.y1, s.x2, s.y2]
    }
}

/// A cylinder shuttling between `A` and `B` at constant speed, reflecting at the ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub ax: f64,
    pub ay: f64,
    pub bx: f64,
    pub by: f64,
    pub speed: f64,
    pub r: f64,
}

impl DynamicObstacle {
    /// Fraction of the way from A to B after `time` seconds (triangle wave in `[0, 1]`).
    pub fn phase(&self, time: f64) -> f64 {
        let len = (self.bx - self.ax).hypot(self.by - self.ay);
        if len == 0.0 || self.speed == 0.0 {
            return 0.0;
        }
        let d = (self.speed * time).rem_euclid(2.0 * len);
        let along = if d <= len { d } else { 2.0 * len - d };
        (along / len).clamp(0.0, 1.0)
    }

    pub fn position(&self, time: f64) -> (f64, f64) {
        let u = self.phase(time);
        (self.ax + u * (self.bx - self.ax), self.ay + u * (self.by - self.ay))
    }

    pub fn at(&self, time: f64) -> Circle {
        let (x, y) = self.position(time);
        Circle { x, y, r: self.r }
    }

    pub fn path(&self) -> Segment {
        Segment { x1: self.ax, y1: self.ay, x2: self.bx, y2: self.by }
    }
}

/// Immutable arena template. The bounding rectangle is itself a wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: Bounds,
    #[serde(default)]
    pub circles: Vec<Circle>,
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub dynamic: Vec<DynamicObstacle>,
}

impl World {
    pub fn empty() -> Self {
        World {
            bounds: Bounds { x_min: -10.0, y_min: -10.0, x_max: 10.0, y_max: 10.0 },
            circles: Vec::new(),
            segments: Vec::new(),
            dynamic: Vec::new(),
        }
    }

    /// Default arena: 20×20 m, a few static pillars and walls, 11 moving cylinders.
    pub fn default_world() -> Self {
        let c = |x, y, r| Circle { x, y, r };
        let s = |x1, y1, x2, y2| Segment { x1, y1, x2, y2 };
        let d = |ax, ay, bx, by, speed| DynamicObstacle { ax, ay, bx, by, speed, r: 0.3 };
        World {
            circles: vec![c(-6.0, 6.0, 0.6), c(6.0, -6.0, 0.6), c(6.5, 6.5, 0.5), c(-6.5, -6.0, 0.5)],
            segments: vec![s(-9.9, 0.0, -7.5, 0.0), s(7.5, 0.0, 9.9, 0.0), s(0.0, 7.5, 0.0, 9.9), s(0.0, -9.9, 0.0, -7.5)],
            dynamic: vec![
                d(-8.0, 4.0, -3.0, 4.0, 0.2),
                d(3.0, 4.0, 8.0, 4.0, 0.2),
                d(-8.0, -4.0, -3.0, -4.0, 0.25),
                d(3.0, -4.0, 8.0, -4.0, 0.25),
                d(-3.0, -1.5, -3.0, 1.5, 0.15),
                d(3.0, -1.5, 3.0, 1.5, 0.15),
                d(-1.5, 0.0, 1.5, 0.0, 0.2),
                d(-4.0, 8.5, -1.5, 8.5, 0.2),
                d(1.5, -8.5, 4.0, -8.5, 0.2),
                d(-8.5, -2.0, -8.5, 2.0, 0.1),
                d(8.5, -2.0, 8.5, 2.0, 0.1),
            ],
            ..World::empty()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if ![b.x_min, b.y_min, b.x_max, b.y_max].iter().all(|v| v.is_finite()) || b.x_max <= b.x_min || b.y_max <= b.y_min {
            return Err(Error::domain(format!("degenerate bounds {:?}", <[f64; 4]>::from(*b))));
        }
        for (i, c) in self.circles.iter().enumerate() {
            if !(c.r > 0.0) || !b.contains(c.x, c.y) {
                return Err(Error::domain(format!("circle {i} has non-positive radius or lies outside bounds")));
            }
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !b.contains(s.x1, s.y1) || !b.contains(s.x2, s.y2) {
                return Err(Error::domain(format!("segment {i} leaves the bounds")));
            }
        }
        for (i, d) in self.dynamic.iter().enumerate() {
            if !(d.speed >= 0.0) || !(d.r > 0.0) || !d.speed.is_finite() {
                return Err(Error::domain(format!("dynamic obstacle {i}: need speed >= 0 and r > 0")));
            }
            if !b.contains(d.ax, d.ay) || !b.contains(d.bx, d.by) {
                return Err(Error::domain(format!("dynamic obstacle {i} path leaves the bounds")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let w: World = serde_json::from_str(&text).map_err(|e| Error::from(e).at(path.display()))?;
        w.validate()?;
        Ok(w)
    }

    /// Dynamic obstacle circles after `step` steps of length `dt`.
    pub fn dynamic_at(&self, step: u64, dt: f64) -> Vec<Circle> {
        let time = step as f64 * dt;
        self.dynamic.iter().map(|d| d.at(time)).collect()
    }

    /// Smallest distance from a point to any obstacle surface or wall.
    pub fn clearance(&self, x: f64, y: f64, dynamic: &[Circle]) -> f64 {
        let mut best = self.bounds.clearance(x, y);
        for c in self.circles.iter().chain(dynamic) {
            best = best.min(c.surface_distance(x, y));
        }
        for s in &self.segments {
            best = best.min(point_segment_distance(x, y, s));
        }
        best
    }

    /// Like [`World::clearance`] but against every position a dynamic obstacle can occupy.
    pub fn worst_case_clearance(&self, x: f64, y: f64) -> f64 {
        let swept = self.dynamic.iter().map(|d| point_segment_distance(x, y, &d.path()) - d.r);
        swept.fold(self.clearance(x, y, &[]), f64::min)
    }
}

/// Start pose and goal for one episode. JSON form `[sx, sy, gx, gy]` or `[sx, sy, gx, gy, heading]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Trial {
    pub start_x: f64,
    pub start_y: f64,
    pub goal_x: f64,
    pub goal_y: f64,
    pub heading: f64,
}

impl TryFrom<Vec<f64>> for Trial {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        match v[..] {
            [sx, sy, gx, gy] => Ok(Trial { start_x: sx, start_y: sy, goal_x: gx, goal_y: gy, heading: 0.0 }),
            [sx, sy, gx, gy, h] => Ok(Trial { start_x: sx, start_y: sy, goal_x: gx, goal_y: gy, heading: h }),
            _ => Err(Error::shape(format!("trial needs 4 or 5 numbers, got {}", v.len()))),
        }
    }
}

impl From<Trial> for Vec<f64> {
    fn from(t: Trial) -> Self {
        vec![t.start_x, t.start_y, t.goal_x, t.goal_y, t.heading]
    }
}

impl Trial {
    pub fn distance(&self) -> f64 {
        (self.goal_x - self.start_x).hypot(self.goal_y - self.start_y)
    }
}

pub const TRIAL_CLEARANCE: f64 = 1.0;
pub const TRIAL_MIN_SEPARATION: f64 = 5.0;
const TRIAL_MAX_ATTEMPTS: usize = 100_000;

/// Seeded rejection sampling: start and goal keep `TRIAL_CLEARANCE` from every static
/// obstacle, wall and dynamic-obstacle path, and lie at least `TRIAL_MIN_SEPARATION` apart.
/// Heading is uniform.
pub fn generate_trials(world: &World, n: usize, seed: u64) -> Result<Vec<Trial>> {
    world.validate()?;
    let b = world.bounds;
    let free = |x: f64, y: f64| world.worst_case_clearance(x, y) >= TRIAL_CLEARANCE;
    (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, Purpose::Data, i as u64);
            let point = |r: &mut rng::SimRng| (r.random_range(b.x_min..b.x_max), r.random_range(b.y_min..b.y_max));
            for _ in 0..TRIAL_MAX_ATTEMPTS {
                let (sx, sy) = point(&mut r);
                let (gx, gy) = point(&mut r);
                let heading = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let t = Trial { start_x: sx, start_y: sy, goal_x: gx, goal_y: gy, heading };
                if free(sx, sy) && free(gx, gy) && t.distance() >= TRIAL_MIN_SEPARATION {
                    return Ok(t);
                }
            }
            Err(Error::domain(format!("no admissible start/goal pair found for trial {i}")))
        })
        .collect()
}

pub fn load_trials(path: impl AsRef<Path>) -> Result<Vec<Trial>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).at(path.display()))
}
