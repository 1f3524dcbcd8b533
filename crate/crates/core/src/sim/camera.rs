//! Synthetic phone camera: pinhole projection of targets as bright discs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::Pose;
use super::world::{CameraModel, FrameNoise, WorldModel};
use crate::frame::Frame;

pub const BACKGROUND: u8 = 20;
pub const TARGET: u8 = 230;

/// Where a target lands on the sensor before any frame defects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Disc centre, continuous pixel coordinates (pixel `i` spans `[i, i+1)`).
    pub column: f64,
    pub row: f64,
    pub radius_px: f64,
    /// Bearing relative to the heading, counterclockwise-positive.
    pub bearing: f64,
    pub distance: f64,
}

/// Projects a world point of the given physical radius. Returns `None` for
/// points at or behind the image plane.
pub fn project(camera: &CameraModel, pose: &Pose, x: f64, y: f64, radius: f64) -> Option<Projection> {
    let (dx, dy) = (x - pose.x, y - pose.y);
    let (s, c) = pose.theta.sin_cos();
    let forward = dx * c + dy * s;
    let lateral = -dx * s + dy * c;
    if forward <= 1e-9 {
        return None;
    }
    let focal = camera.focal_px();
    let (w, h) = (camera.width as f64, camera.height as f64);
    let distance = dx.hypot(dy);
    let column = w / 2.0 - focal * (lateral / forward);
    let row = (h / 2.0 + focal * camera.tilt_deg.to_radians().tan()).clamp(0.0, h - 1.0);
    let radius_px = (focal * radius / distance).clamp(1.0, h / 2.0);
    Some(Projection {
        column,
        row,
        radius_px,
        bearing: lateral.atan2(forward),
        distance,
    })
}

/// Renders the camera view. Pure in `(world, pose, clock)`.
///
/// Discs partly outside the field of view are drawn clipped.
pub fn render_frame(world: &WorldModel, pose: &Pose, clock: f64) -> Frame {
    let cam = &world.camera;
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut pixels = vec![BACKGROUND; w * h];
    for target in &world.targets {
        let (tx, ty) = target.position_at(clock);
        let Some(p) = project(cam, pose, tx, ty, target.radius) else {
            continue;
        };
        draw_disc(&mut pixels, w, h, p.column, p.row, p.radius_px);
    }
    let frame = Frame::new(cam.width, cam.height, pixels, clock);
    apply_noise(frame, &world.frame_noise, world.seed)
}

fn draw_disc(pixels: &mut [u8], w: usize, h: usize, cx: f64, cy: f64, r: f64) {
    let r2 = r * r;
    let y0 = (cy - r).floor().max(0.0) as usize;
    let y1 = ((cy + r).ceil().max(0.0) as usize).min(h);
    let x0 = (cx - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil().max(0.0) as usize).min(w);
    for y in y0..y1 {
        let dy = y as f64 + 0.5 - cy;
        let row = &mut pixels[y * w..(y + 1) * w];
        for (x, px) in row.iter_mut().enumerate().take(x1).skip(x0) {
            let dx = x as f64 + 0.5 - cx;
            if dx * dx + dy * dy <= r2 {
                *px = TARGET;
            }
        }
    }
}

/// Rotation, then contrast about 128, then brightness, then sensor noise,
/// clamped to [0, 255].
pub fn apply_noise(frame: Frame, noise: &FrameNoise, seed: u64) -> Frame {
    if noise.is_clean() {
        return frame;
    }
    let mut frame = frame.rotated_cw(noise.rotation_deg / 90);
    let contrast = noise.contrast_scale;
    let offset = noise.brightness_offset as f64;
    let lut: Vec<f64> = (0..=255u32)
        .map(|v| (v as f64 - 128.0) * contrast + 128.0 + offset)
        .collect();
    if noise.sensor_noise == 0 {
        for px in &mut frame.pixels {
            *px = lut[*px as usize].round().clamp(0.0, 255.0) as u8;
        }
    } else {
        let amp = noise.sensor_noise as i32;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ frame.timestamp.to_bits());
        for px in &mut frame.pixels {
            let jitter = rng.random_range(-amp..=amp) as f64;
            *px = (lut[*px as usize] + jitter).round().clamp(0.0, 255.0) as u8;
        }
    }
    frame
}
