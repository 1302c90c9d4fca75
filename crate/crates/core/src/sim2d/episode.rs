//! Single-episode rollout.

use serde::{Deserialize, Serialize};

use super::kinematics::{step_kinematics, RobotPose};
use super::world::{Trial, World};
use super::observe;
use crate::degradation::DegradationSpec;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::snn::FiringRecorder;

/// Slack on the collision test so a robot that closes exactly to the threshold in
/// floating point still counts as touching.
pub const CONTACT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub wheel_base: f64,
    pub v_max: f64,
    pub goal_threshold: f64,
    pub collision_threshold: f64,
    pub max_steps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { dt: 0.1, wheel_base: 0.3, v_max: 0.5, goal_threshold: 0.5, collision_threshold: 0.35, max_steps: 1000 }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt, self.wheel_base, self.v_max, self.goal_threshold, self.collision_threshold];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("episode dt, wheel_base, v_max and thresholds must be positive"));
        }
        Ok(())
    }
}

/// Maps a raw 24-dim observation to wheel speeds `(ν_L, ν_R)`.
pub trait Policy: Send {
    fn begin_episode(&mut self) {}

    fn act(&mut self, state: &[f64], rng: &mut SimRng) -> Result<(f64, f64)>;

    /// Firing counts gathered since `begin_episode`, if the policy records any.
    fn end_episode(&mut self) -> Option<FiringRecorder> {
        None
    }

    /// Copy of the policy with a weight degradation applied.
    fn degraded(&self, spec: &DegradationSpec) -> Result<Self>
    where
        Self: Sized,
    {
        Err(Error::domain(format!("policy has no weights to degrade with {}", spec.label())))
    }
}

/// Wraps a plain closure as a policy.
#[derive(Clone)]
pub struct FnPolicy<F>(pub F);

impl<F: FnMut(&[f64]) -> (f64, f64) + Send> Policy for FnPolicy<F> {
    fn act(&mut self, state: &[f64], _rng: &mut SimRng) -> Result<(f64, f64)> {
        Ok((self.0)(state))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Overtime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub outcome: Outcome,
    pub steps: usize,
    pub recording: Option<FiringRecorder>,
}

/// An input degradation paired with its own noise stream.
pub struct InputDegrader {
    pub spec: DegradationSpec,
    pub rng: SimRng,
}

/// Rolls `policy` from the trial start until success, collision or `max_steps`.
///
/// Each step: observe, degrade inputs, act, move the robot, advance dynamic obstacles,
/// then test collision before goal.
pub fn run_episode<P: Policy + ?Sized>(
    world: &World,
    policy: &mut P,
    trial: &Trial,
    cfg: &EpisodeConfig,
    inputs: &mut [InputDegrader],
    rng: &mut SimRng,
) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let goal = (trial.goal_x, trial.goal_y);
    let b = world.bounds;
    if !b.contains(trial.start_x, trial.start_y) || !b.contains(goal.0, goal.1) {
        return Err(Error::domain("trial start or goal lies outside the bounds"));
    }
    let collides = |x: f64, y: f64, step: u64| world.clearance(x, y, &world.dynamic_at(step, cfg.dt)) < cfg.collision_threshold + CONTACT_EPS;
    if collides(trial.start_x, trial.start_y, 0) {
        return Err(Error::domain("trial start touches an obstacle"));
    }
    if world.clearance(goal.0, goal.1, &[]) < cfg.collision_threshold {
        return Err(Error::domain("trial goal touches a static obstacle"));
    }

    let mut pose = RobotPose::at(trial.start_x, trial.start_y, trial.heading);
    let reached = |p: &RobotPose| (goal.0 - p.x).hypot(goal.1 - p.y) < cfg.goal_threshold;
    policy.begin_episode();
    let finish = |policy: &mut P, outcome, steps| Ok(EpisodeOutcome { outcome, steps, recording: policy.end_episode() });
    if reached(&pose) {
        return finish(policy, Outcome::Success, 0);
    }
    for step in 1..=cfg.max_steps {
        let dynamic = world.dynamic_at(step as u64 - 1, cfg.dt);
        let mut state = observe(world, &dynamic, &pose, goal);
        for d in inputs.iter_mut() {
            state = d.spec.apply_input(&state, &mut d.rng)?;
        }
        let (vl, vr) = policy.act(&state, rng).map_err(|e| e.at(format_args!("step {step}")))?;
        if !(vl.is_finite() && vr.is_finite()) {
            return Err(Error::numeric(format!("step {step}: policy produced non-finite wheel speeds")));
        }
        pose = step_kinematics(&pose, vl, vr, cfg.dt, cfg.wheel_base);
        if collides(pose.x, pose.y, step as u64) {
            return finish(policy, Outcome::Collision, step);
        }
        if reached(&pose) {
            return finish(policy, Outcome::Success, step);
        }
    }
    finish(policy, Outcome::Overtime, cfg.max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sim2d::Circle;

    fn trial(sx: f64, sy: f64, gx: f64, gy: f64, heading: f64) -> Trial {
        Trial { start_x: sx, start_y: sy, goal_x: gx, goal_y: gy, heading }
    }

    fn run(world: &World, p: &mut impl Policy, t: Trial) -> Result<EpisodeOutcome> {
        run_episode(world, p, &t, &EpisodeConfig::default(), &mut [], &mut rng::from_seed(0))
    }

    #[test]
    fn start_at_goal() {
        let out = run(&World::empty(), &mut FnPolicy(|_: &[f64]| (0.5, 0.5)), trial(0.0, 0.0, 0.3, 0.0, 0.0)).unwrap();
        assert_eq!((out.outcome, out.steps), (Outcome::Success, 0));
    }

    #[test]
    fn full_speed_into_wall() {
        let out = run(&World::empty(), &mut FnPolicy(|_: &[f64]| (0.5, 0.5)), trial(9.0, 0.0, -5.0, 0.0, 0.0)).unwrap();
        assert_eq!(out.outcome, Outcome::Collision);
        let bound = ((1.0f64 - 0.35) / (0.5 * 0.1)).ceil() as usize;
        assert!(out.steps <= bound, "{} > {bound}", out.steps);
    }

    #[test]
    fn standing_still_times_out() {
        let out = run(&World::empty(), &mut FnPolicy(|_: &[f64]| (0.0, 0.0)), trial(0.0, 0.0, 5.0, 5.0, 0.0)).unwrap();
        assert_eq!((out.outcome, out.steps), (Outcome::Overtime, 1000));
    }

    #[test]
    fn drives_to_goal() {
        let out = run(&World::empty(), &mut FnPolicy(|_: &[f64]| (0.5, 0.5)), trial(0.0, 0.0, 5.0, 0.0, 0.0)).unwrap();
        assert_eq!(out.outcome, Outcome::Success);
        assert_eq!(out.steps, 91);
    }

    #[test]
    fn invalid_trials() {
        let mut p = FnPolicy(|_: &[f64]| (0.0, 0.0));
        assert!(matches!(run(&World::empty(), &mut p, trial(11.0, 0.0, 0.0, 0.0, 0.0)), Err(Error::Domain(_))));
        let mut w = World::empty();
        w.circles.push(Circle { x: 0.0, y: 0.0, r: 1.0 });
        assert!(matches!(run(&w, &mut p, trial(0.5, 0.0, 5.0, 0.0, 0.0)), Err(Error::Domain(_))));
    }

}
