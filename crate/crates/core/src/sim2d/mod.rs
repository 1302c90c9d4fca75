//! Deterministic 2D obstacle-avoidance arena for a differential-drive robot.
//!
//! Raw state layout (24 values):
//! `[G_dis, G_dir_right, G_dir_left, ν, ω_right, ω_left, L_0 .. L_17]`.
//! Bearings and angular speeds are positive counter-clockwise (to the left) and are
//! split into rectified right/left components.

mod campaign;
mod episode;
mod expert;
pub mod geometry;
mod kinematics;
mod policy;
mod world;

pub use campaign::{campaign, rates, CampaignResult, TrialResult};
pub use episode::{run_episode, EpisodeConfig, EpisodeOutcome, FnPolicy, InputDegrader, Outcome, Policy, CONTACT_EPS};
pub use expert::{expert_controller, ExpertParams, ExpertPolicy};
pub use kinematics::{body_speeds, step_kinematics, RobotPose};
pub use policy::SnnPolicy;
pub use world::{
    generate_trials, load_trials, Bounds, Circle, DynamicObstacle, Segment, Trial, World, TRIAL_CLEARANCE,
    TRIAL_MIN_SEPARATION,
};

use crate::encoding::StateNormalizer;
use geometry::{normalize_angle, ray_circle, ray_segment};

pub const N_RAYS: usize = 18;
pub const STATE_DIM: usize = 24;
pub const LIDAR_OFFSET: usize = 6;
pub const LIDAR_MIN: f64 = 0.2;
pub const LIDAR_MAX: f64 = 6.0;
pub const RAY_SPACING_DEG: f64 = 10.0;

/// Ray `k` angle relative to the heading: `−85° + 10°·k`.
pub fn ray_angle(k: usize) -> f64 {
    (-90.0 + RAY_SPACING_DEG / 2.0 + RAY_SPACING_DEG * k as f64).to_radians()
}

/// Unclamped distance from `(x, y)` along absolute `angle` to the nearest obstacle or
/// wall. Infinite only when the origin lies outside the bounds and nothing is hit.
pub fn cast_ray(world: &World, dynamic: &[Circle], x: f64, y: f64, angle: f64) -> f64 {
    let (dx, dy) = (angle.cos(), angle.sin());
    let circles = world.circles.iter().chain(dynamic).filter_map(|c| ray_circle(x, y, dx, dy, c));
    let edges = world.bounds.edges();
    let segments = world.segments.iter().chain(&edges).filter_map(|s| ray_segment(x, y, dx, dy, s));
    circles.chain(segments).fold(f64::INFINITY, f64::min)
}

/// 18 LIDAR ranges over the forward 180°, clamped to `[LIDAR_MIN, LIDAR_MAX]`.
pub fn raycast(world: &World, dynamic: &[Circle], pose: &RobotPose) -> [f64; N_RAYS] {
    std::array::from_fn(|k| cast_ray(world, dynamic, pose.x, pose.y, pose.heading + ray_angle(k)).clamp(LIDAR_MIN, LIDAR_MAX))
}

/// Goal bearing relative to the heading, in `(−π, π]`, positive to the left.
pub fn goal_bearing(pose: &RobotPose, goal: (f64, f64)) -> f64 {
    let (dx, dy) = (goal.0 - pose.x, goal.1 - pose.y);
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    normalize_angle(dy.atan2(dx) - pose.heading)
}

pub fn observe(world: &World, dynamic: &[Circle], pose: &RobotPose, goal: (f64, f64)) -> Vec<f64> {
    let dist = (goal.0 - pose.x).hypot(goal.1 - pose.y);
    let bearing = goal_bearing(pose, goal);
    let mut s = Vec::with_capacity(STATE_DIM);
    s.extend([dist, (-bearing).max(0.0), bearing.max(0.0), pose.v, (-pose.omega).max(0.0), pose.omega.max(0.0)]);
    s.extend(raycast(world, dynamic, pose));
    s
}

/// Bearings beyond this saturate the encoder.
pub const BEARING_SPAN: f64 = 1.5;
/// Rays at or beyond this range encode as silence; closer ones fire more.
pub const PROXIMITY_RANGE: f64 = 2.0;

/// Observation bounds used by the avoid task: distance up to the arena diagonal,
/// bearings up to `BEARING_SPAN`, wheel-speed-limited body speeds, and LIDAR as
/// proximity (`PROXIMITY_RANGE` → 0, `LIDAR_MIN` → 1).
pub fn default_normalizer(world: &World, cfg: &EpisodeConfig) -> StateNormalizer {
    let w_max = 2.0 * cfg.v_max / cfg.wheel_base;
    let mut b = vec![
        (0.0, world.bounds.diagonal()),
        (0.0, BEARING_SPAN),
        (0.0, BEARING_SPAN),
        (0.0, cfg.v_max),
        (0.0, w_max),
        (0.0, w_max),
    ];
    b.extend([(PROXIMITY_RANGE, LIDAR_MIN); N_RAYS]);
    StateNormalizer::new(b).expect("positive-width bounds")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn ray_angles_span_forward_half() {
        assert!((ray_angle(0) + 85f64.to_radians()).abs() < 1e-15);
        assert!((ray_angle(17) - 85f64.to_radians()).abs() < 1e-15);
        assert!((ray_angle(9) - 5f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn forward_ray_hits_circle() {
        let mut w = World::empty();
        w.circles.push(Circle { x: 2.0, y: 0.0, r: 0.5 });
        assert!((cast_ray(&w, &[], 0.0, 0.0, 0.0) - 1.5).abs() < 1e-12);
        let scan = raycast(&w, &[], &RobotPose::at(0.0, 0.0, 0.0));
        // the two rays nearest the heading sit at ±5°
        assert!((scan[8] - 1.523_757_871_396_248_3).abs() < 1e-12);
        assert!((scan[9] - 1.523_757_871_396_248_3).abs() < 1e-12);
        assert_eq!(scan[0], LIDAR_MAX);
    }

    #[test]
    fn empty_world_clamps_high() {
        assert_eq!(raycast(&World::empty(), &[], &RobotPose::at(0.0, 0.0, 0.7)), [LIDAR_MAX; N_RAYS]);
    }

    #[test]
    fn close_obstacle_clamps_low() {
        let mut w = World::empty();
        w.circles.push(Circle { x: 0.6, y: 0.0, r: 0.5 });
        let scan = raycast(&w, &[], &RobotPose::at(0.0, 0.0, 0.0));
        assert_eq!(scan[9], LIDAR_MIN);
    }

    #[test]
    fn observe_examples() {
        let w = World::empty();
        let at_goal = observe(&w, &[], &RobotPose::at(1.0, 1.0, 0.0), (1.0, 1.0));
        assert_eq!(at_goal.len(), STATE_DIM);
        assert_eq!(at_goal[0], 0.0);
        let ahead = observe(&w, &[], &RobotPose::at(0.0, 0.0, 0.0), (4.0, 0.0));
        assert_eq!((ahead[1], ahead[2]), (0.0, 0.0));
        let left = observe(&w, &[], &RobotPose::at(0.0, 0.0, 0.0), (0.0, 5.0));
        assert_eq!(left[0], 5.0);
        assert_eq!(left[1], 0.0);
        assert!((left[2] - FRAC_PI_2).abs() < 1e-15);
        let right = observe(&w, &[], &RobotPose::at(0.0, 0.0, FRAC_PI_2), (5.0, 0.0));
        assert!((right[1] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(right[2], 0.0);
    }

    #[test]
    fn normalizer_shape() {
        let n = default_normalizer(&World::default_world(), &EpisodeConfig::default());
        assert_eq!(n.len(), STATE_DIM);
        assert_eq!(n.bounds()[LIDAR_OFFSET], (PROXIMITY_RANGE, LIDAR_MIN));
    }
}
