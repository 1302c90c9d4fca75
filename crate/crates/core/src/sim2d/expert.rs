//! Scripted potential-field controller used as the behavior-cloning teacher.

use serde::{Deserialize, Serialize};

use super::episode::Policy;
use super::{ray_angle, LIDAR_OFFSET, N_RAYS, STATE_DIM};
use crate::error::{ensure_len, Result};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertParams {
    pub attract: f64,
    pub repulse: f64,
    /// Rays shorter than this push the robot away.
    pub influence: f64,
    pub turn_gain: f64,
    pub v_max: f64,
    pub wheel_base: f64,
    /// Front ranges at or below `slow_near` drive at `min_speed_factor`; at `slow_far` and beyond, full speed.
    pub slow_near: f64,
    pub slow_far: f64,
    pub min_speed_factor: f64,
}

impl Default for ExpertParams {
    fn default() -> Self {
        ExpertParams {
            attract: 1.0,
            repulse: 1.0,
            influence: 1.0,
            turn_gain: 2.5,
            v_max: 0.5,
            wheel_base: 0.3,
            slow_near: 0.45,
            slow_far: 1.2,
            min_speed_factor: 0.1,
        }
    }
}

/// Half-width of the cone whose rays set the forward speed.
const FRONT_CONE: f64 = 0.45;

/// Wheel speeds `(ν_L, ν_R)` in `[0, v_max]` from a raw observation.
///
/// Mirrored ray pairs are combined before the lateral sum, so a left/right symmetric
/// scan yields exactly zero turn.
pub fn expert_controller(state: &[f64], p: &ExpertParams) -> Result<(f64, f64)> {
    ensure_len("robot state", state.len(), STATE_DIM)?;
    let bearing = state[2] - state[1];
    let ranges = &state[LIDAR_OFFSET..LIDAR_OFFSET + N_RAYS];
    let push = |r: f64| if r < p.influence { p.repulse * (1.0 / r.max(1e-3) - 1.0 / p.influence) } else { 0.0 };

    let mut fx = p.attract * bearing.cos();
    let mut fy = p.attract * bearing.sin();
    let mut front = f64::INFINITY;
    for k in 0..N_RAYS / 2 {
        let m = N_RAYS - 1 - k;
        let phi = ray_angle(m);
        let (right, left) = (push(ranges[k]), push(ranges[m]));
        fx -= (right + left) * phi.cos();
        fy -= (left - right) * phi.sin();
        if phi <= FRONT_CONE {
            front = front.min(ranges[k]).min(ranges[m]);
        }
    }
    let desired = if fy == 0.0 { 0.0 } else { fy.atan2(fx) };
    let w_max = 2.0 * p.v_max / p.wheel_base;
    let omega = (p.turn_gain * desired).clamp(-w_max, w_max);
    let slow = ((front - p.slow_near) / (p.slow_far - p.slow_near)).clamp(p.min_speed_factor, 1.0);
    let forward = p.v_max * desired.cos().max(0.0) * slow;
    let half = omega * p.wheel_base / 2.0;
    Ok(((forward - half).clamp(0.0, p.v_max), (forward + half).clamp(0.0, p.v_max)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpertPolicy {
    pub params: ExpertParams,
}

impl Policy for ExpertPolicy {
    fn act(&mut self, state: &[f64], _rng: &mut SimRng) -> Result<(f64, f64)> {
        expert_controller(state, &self.params)
    }
}
