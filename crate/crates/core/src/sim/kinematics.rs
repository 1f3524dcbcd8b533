//! Closed-form differential-drive odometry.

use super::params::{normalize_angle, Pose, RobotParams};

/// sin(x)/x, continuous at zero.
#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Advances `pose` along the exact circular arc traced when the left and right
/// wheels turn by `dl_steps` and `dr_steps` at a constant ratio.
///
/// The chord of an arc of turning angle `dtheta` and radius `R` has length
/// `2R sin(dtheta/2)` and points along `theta + dtheta/2`. Written as
/// `d * sinc(dtheta/2)` with `d` the centre path length it stays well
/// conditioned as `dtheta -> 0`, where it reduces to straight-line motion, and
/// as `d -> 0`, where it reduces to rotation in place.
pub fn pose_delta(params: &RobotParams, dl_steps: i64, dr_steps: i64, pose: &Pose) -> Pose {
    if dl_steps == 0 && dr_steps == 0 {
        return *pose;
    }
    let d_l = params.step_distance(dl_steps);
    let d_r = params.step_distance(dr_steps);
    let d = 0.5 * (d_l + d_r);
    let dtheta = if dl_steps == dr_steps {
        0.0
    } else {
        (d_r - d_l) / params.wheel_base
    };
    let half = 0.5 * dtheta;
    let chord = d * sinc(half);
    let heading = pose.theta + half;
    Pose {
        x: pose.x + chord * heading.cos(),
        y: pose.y + chord * heading.sin(),
        theta: normalize_angle(pose.theta + dtheta),
    }
}

/// Applies a step pair produced by two motors sharing one step rate: both
/// wheels move together for the shorter count, then the longer wheel finishes
/// alone (pivoting about the stopped wheel).
pub fn shared_rate_delta(params: &RobotParams, dl_steps: i64, dr_steps: i64, pose: &Pose) -> Pose {
    let common = dl_steps.abs().min(dr_steps.abs());
    let (l1, r1) = (common * dl_steps.signum(), common * dr_steps.signum());
    let mid = pose_delta(params, l1, r1, pose);
    pose_delta(params, dl_steps - l1, dr_steps - r1, &mid)
}
