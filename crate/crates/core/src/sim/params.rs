use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Wheel geometry and stepper limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// meters
    pub wheel_radius: f64,
    /// Axle track in meters.
    pub wheel_base: f64,
    pub steps_per_rev: u32,
    /// steps/second
    pub max_speed: u32,
    /// Speed used when a `go` omits it, steps/second.
    pub default_speed: u32,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            wheel_radius: 0.03,
            wheel_base: 0.12,
            steps_per_rev: 2048,
            max_speed: 2000,
            default_speed: 500,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.wheel_radius > 0.0) {
            return Err("wheel_radius must be > 0".into());
        }
        if !(self.wheel_base > 0.0) {
            return Err("wheel_base must be > 0".into());
        }
        if self.steps_per_rev == 0 {
            return Err("steps_per_rev must be > 0".into());
        }
        if self.max_speed == 0 || self.default_speed == 0 {
            return Err("speeds must be > 0".into());
        }
        if self.default_speed > self.max_speed {
            return Err("default_speed must not exceed max_speed".into());
        }
        Ok(())
    }

    /// Linear wheel travel for a signed step count, meters.
    #[inline]
    pub fn step_distance(&self, steps: i64) -> f64 {
        TAU * self.wheel_radius * steps as f64 / self.steps_per_rev as f64
    }
}

/// Planar pose, heading counterclockwise-positive in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
