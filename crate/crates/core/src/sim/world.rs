//! The simulated room: robot start pose, targets, camera and frame defects.

use serde::{Deserialize, Serialize};

use super::params::{normalize_angle, Pose};
use crate::input::{self, InputError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub dwell_s: f64,
}

/// A round target (the stand-in for a face), optionally moving through
/// waypoints at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    #[serde(default)]
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "Target::default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<Waypoint>>,
    /// Travel speed between waypoints, m/s.
    #[serde(default = "Target::default_speed")]
    pub speed: f64,
}

impl Target {
    fn default_radius() -> f64 {
        0.1
    }

    fn default_speed() -> f64 {
        0.2
    }

    pub fn fixed(id: impl Into<String>, x: f64, y: f64, radius: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
            radius,
            waypoints: None,
            speed: Self::default_speed(),
        }
    }

    /// Position at simulated time `t`: travel start → wp1 → dwell → wp2 …,
    /// holding at the last waypoint.
    pub fn position_at(&self, t: f64) -> (f64, f64) {
        let Some(waypoints) = self.waypoints.as_deref().filter(|w| !w.is_empty()) else {
            return (self.x, self.y);
        };
        if self.speed <= 0.0 {
            return (self.x, self.y);
        }
        let mut remaining = t.max(0.0);
        let mut at = (self.x, self.y);
        for wp in waypoints {
            let leg = (wp.x - at.0).hypot(wp.y - at.1);
            let travel = leg / self.speed;
            if remaining < travel {
                let f = remaining / travel;
                return (at.0 + f * (wp.x - at.0), at.1 + f * (wp.y - at.1));
            }
            remaining -= travel + wp.dwell_s;
            at = (wp.x, wp.y);
            if remaining < 0.0 {
                return at;
            }
        }
        at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
    /// Phone mount tilt, 0 (forward) to 90 degrees.
    pub tilt_deg: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fov_deg: 60.0,
            width: 320,
            height: 240,
            tilt_deg: 0.0,
        }
    }
}

impl CameraModel {
    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }
}

/// Image defects applied after rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameNoise {
    /// Clockwise rotation of the delivered image: 0, 90, 180 or 270.
    pub rotation_deg: u32,
    pub brightness_offset: i32,
    pub contrast_scale: f64,
    /// Amplitude of uniform per-pixel noise, seeded by the world seed.
    pub sensor_noise: u8,
}

impl Default for FrameNoise {
    fn default() -> Self {
        Self {
            rotation_deg: 0,
            brightness_offset: 0,
            contrast_scale: 1.0,
            sensor_noise: 0,
        }
    }
}

impl FrameNoise {
    pub fn is_clean(&self) -> bool {
        *self == FrameNoise::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldModel {
    #[serde(rename = "robot")]
    pub robot_start: Pose,
    pub targets: Vec<Target>,
    pub camera: CameraModel,
    pub frame_noise: FrameNoise,
    pub seed: u64,
}

/// Bearing of the reference target in [`WorldModel::standard`], degrees.
pub const STANDARD_BEARING_DEG: f64 = 30.0;
/// Distance of the reference target in [`WorldModel::standard`], meters.
pub const STANDARD_DISTANCE_M: f64 = 1.5;

impl WorldModel {
    /// Robot at the origin facing +x, one 0.1 m target at 30 degrees to the
    /// left and 1.5 m away.
    pub fn standard() -> Self {
        let bearing = STANDARD_BEARING_DEG.to_radians();
        Self {
            targets: vec![Target::fixed(
                "face",
                STANDARD_DISTANCE_M * bearing.cos(),
                STANDARD_DISTANCE_M * bearing.sin(),
                0.1,
            )],
            ..Default::default()
        }
    }

    /// [`WorldModel::standard`] seen through a phone mounted upside down.
    pub fn standard_rotated() -> Self {
        let mut world = Self::standard();
        world.frame_noise.rotation_deg = 180;
        world
    }

    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let mut world: WorldModel = input::from_json(text)?;
        world.validate()?;
        world.robot_start.theta = normalize_angle(world.robot_start.theta);
        Ok(world)
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let r = &self.robot_start;
        for (name, v) in [("robot.x", r.x), ("robot.y", r.y), ("robot.theta", r.theta)] {
            if !v.is_finite() {
                return Err(InputError::field(name, "must be finite"));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            if !(t.radius > 0.0) || !t.radius.is_finite() {
                return Err(InputError::field(format!("targets[{i}].radius"), "must be > 0"));
            }
            if !t.x.is_finite() || !t.y.is_finite() {
                return Err(InputError::field(format!("targets[{i}]"), "position must be finite"));
            }
            if t.speed < 0.0 {
                return Err(InputError::field(format!("targets[{i}].speed"), "must be >= 0"));
            }
            for (j, wp) in t.waypoints.iter().flatten().enumerate() {
                if !(wp.dwell_s >= 0.0) {
                    return Err(InputError::field(
                        format!("targets[{i}].waypoints[{j}].dwell_s"),
                        "must be >= 0",
                    ));
                }
            }
        }
        let c = &self.camera;
        if !(c.fov_deg > 0.0 && c.fov_deg < 180.0) {
            return Err(InputError::field("camera.fov_deg", "must be in (0, 180)"));
        }
        if !(0.0..=90.0).contains(&c.tilt_deg) {
            return Err(InputError::field("camera.tilt_deg", "must be in [0, 90]"));
        }
        if c.width == 0 || c.height == 0 {
            return Err(InputError::field("camera", "width and height must be > 0"));
        }
        let n = &self.frame_noise;
        if !matches!(n.rotation_deg, 0 | 90 | 180 | 270) {
            return Err(InputError::field(
                "frame_noise.rotation_deg",
                "must be one of 0, 90, 180, 270",
            ));
        }
        if !(n.contrast_scale > 0.0 && n.contrast_scale <= 1.0) {
            return Err(InputError::field("frame_noise.contrast_scale", "must be in (0, 1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let w = WorldModel::from_json("{}").unwrap();
        assert_eq!(w, WorldModel::default());
        assert_eq!(w.camera.width, 320);
        assert!((w.camera.focal_px() - 160.0 / (30f64.to_radians()).tan()).abs() < 1e-12);
    }

    #[test]
    fn full_document() {
        let w = WorldModel::from_json(
            r#"{
              "robot": {"x": 0.5, "y": -0.5, "theta": 1.0},
              "targets": [{"id": "a", "x": 2, "y": 0, "radius": 0.2,
                           "waypoints": [{"x": 2, "y": 1, "dwell_s": 0.5}]}],
              "camera": {"fov_deg": 70, "width": 160, "height": 120, "tilt_deg": 10},
              "frame_noise": {"rotation_deg": 90, "brightness_offset": -10, "contrast_scale": 0.5}
            }"#,
        )
        .unwrap();
        assert_eq!(w.targets[0].waypoints.as_ref().unwrap().len(), 1);
        assert_eq!(w.frame_noise.rotation_deg, 90);
        assert_eq!(w.camera.width, 160);
    }

    #[test]
    fn bad_fields_are_named() {
        let err = WorldModel::from_json(r#"{"targets":[{"x":1,"y":0,"radius":-1}]}"#).unwrap_err();
        assert_eq!(err.field, "targets[0].radius");
        let err = WorldModel::from_json(r#"{"camera":{"fov_deg":"wide"}}"#).unwrap_err();
        assert_eq!(err.field, "camera.fov_deg");
        let err = WorldModel::from_json(r#"{"frame_noise":{"rotation_deg":45}}"#).unwrap_err();
        assert_eq!(err.field, "frame_noise.rotation_deg");
        let err = WorldModel::from_json(r#"{"camera":{"tilt_deg":95}}"#).unwrap_err();
        assert_eq!(err.field, "camera.tilt_deg");
        let err = WorldModel::from_json(r#"{"robto":{}}"#).unwrap_err();
        assert!(err.message.contains("unknown field"));
    }

    #[test]
    fn waypoint_motion() {
        let mut t = Target::fixed("t", 0.0, 0.0, 0.1);
        t.speed = 1.0;
        t.waypoints = Some(vec![
            Waypoint { x: 1.0, y: 0.0, dwell_s: 1.0 },
            Waypoint { x: 1.0, y: 2.0, dwell_s: 0.0 },
        ]);
        assert_eq!(t.position_at(0.0), (0.0, 0.0));
        assert_eq!(t.position_at(0.5), (0.5, 0.0));
        assert_eq!(t.position_at(1.5), (1.0, 0.0));
        assert_eq!(t.position_at(3.0), (1.0, 1.0));
        assert_eq!(t.position_at(100.0), (1.0, 2.0));
    }

    #[test]
    fn standard_world_geometry() {
        let w = WorldModel::standard();
        let t = &w.targets[0];
        assert!((t.y.atan2(t.x).to_degrees() - 30.0).abs() < 1e-9);
        assert!((t.x.hypot(t.y) - 1.5).abs() < 1e-12);
    }
}
