//! Differential-drive kinematics with exact arc integration.

use serde::{Deserialize, Serialize};

use super::geometry::normalize_angle;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    #[serde(rename = "nu")]
    pub v: f64,
    pub omega: f64,
}

impl RobotPose {
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        RobotPose { x, y, heading: normalize_angle(heading), v: 0.0, omega: 0.0 }
    }
}

/// Body speeds `(ν, ω)` from wheel speeds.
pub fn body_speeds(v_left: f64, v_right: f64, wheel_base: f64) -> (f64, f64) {
    ((v_left + v_right) / 2.0, (v_right - v_left) / wheel_base)
}

pub fn step_kinematics(pose: &RobotPose, v_left: f64, v_right: f64, dt: f64, wheel_base: f64) -> RobotPose {
    let (v, omega) = body_speeds(v_left, v_right, wheel_base);
    let th = pose.heading;
    let (x, y, heading) = if omega.abs() < 1e-9 {
        (pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin(), th)
    } else {
        let r = v / omega;
        let th2 = th + omega * dt;
        (pose.x + r * (th2.sin() - th.sin()), pose.y - r * (th2.cos() - th.cos()), th2)
    };
    RobotPose { x, y, heading: normalize_angle(heading), v, omega }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line() {
        let p = step_kinematics(&RobotPose::at(1.0, 2.0, 0.0), 0.5, 0.5, 0.1, 0.3);
        assert!((p.x - 1.05).abs() < 1e-15);
        assert_eq!(p.y, 2.0);
        assert_eq!(p.heading, 0.0);
        assert_eq!((p.v, p.omega), (0.5, 0.0));
    }

    #[test]
    fn pure_rotation() {
        let p = step_kinematics(&RobotPose::at(0.0, 0.0, 0.3), -0.2, 0.2, 0.1, 0.3);
        assert!(p.x.abs() < 1e-15 && p.y.abs() < 1e-15);
        let dth = 0.4 * 0.1 / 0.3;
        assert!((p.heading - (0.3 + dth)).abs() < 1e-15);
    }
}
