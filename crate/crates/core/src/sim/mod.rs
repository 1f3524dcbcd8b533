//! The virtual robot: stepper motors on a fixed-timestep clock,
//! differential-drive odometry and a synthetic phone camera.

mod camera;
mod device;
mod kinematics;
mod live;
mod params;
mod runner;
mod world;

pub use camera::{apply_noise, project, render_frame, Projection, BACKGROUND, TARGET};
pub use device::{error_response, DeviceState, MotorState, OK_RESPONSE};
pub use kinematics::{pose_delta, shared_rate_delta};
pub use live::{LiveOptions, LiveSim, SimHandle, SimStatus};
pub use params::{normalize_angle, Pose, RobotParams};
pub use runner::{
    check_dt, run, CommandSource, ScriptedCommands, SimError, Simulator, TraceEntry, DEFAULT_DT,
    DEFAULT_FRAME_INTERVAL, MAX_DT, MIN_DT,
};
pub use world::{
    CameraModel, FrameNoise, Target, Waypoint, WorldModel, STANDARD_BEARING_DEG,
    STANDARD_DISTANCE_M,
};
