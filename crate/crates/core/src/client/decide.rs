//! Turning a detection into a motion command.

use super::detect::Detection;
use super::pipeline::PipelineConfig;
use crate::command::{CommandAst, MotionCommand};

/// Half-width of the dead zone around the centre column, as a fraction of
/// frame width.
pub const DEADBAND_FRACTION: f64 = 0.10;
/// Approach until the (margin-adjusted) box is this tall relative to the frame.
pub const CLOSE_ENOUGH_FRACTION: f64 = 0.60;

pub fn deadband_px(frame_width: u32) -> f64 {
    DEADBAND_FRACTION * frame_width as f64
}

/// Horizontal offset of the detection from the image centre, pixels
/// (positive to the right).
pub fn center_error(det: &Detection, frame_width: u32) -> f64 {
    det.center.0 - frame_width as f64 / 2.0
}

/// Decision table:
///
/// | detection                   | command             |
/// |-----------------------------|---------------------|
/// | none                        | `stop()`            |
/// | left of the deadband        | `go(-T, T, v)`      |
/// | right of the deadband       | `go(T, -T, v)`      |
/// | centred, box < 60% tall     | `go(F, F, v)`       |
/// | centred, box >= 60% tall    | `stop()`            |
///
/// with `(T, F, v)` from the configured response level.
pub fn decide(
    det: Option<&Detection>,
    config: &PipelineConfig,
    frame_width: u32,
    frame_height: u32,
) -> CommandAst {
    let Some(det) = det else {
        return CommandAst::Stop;
    };
    let g = config.response.gains();
    let err = center_error(det, frame_width);
    let band = deadband_px(frame_width);
    let go = |l, r| CommandAst::Go(MotionCommand::new(l, r, Some(g.speed)));
    if err < -band {
        go(-g.turn_steps, g.turn_steps)
    } else if err > band {
        go(g.turn_steps, -g.turn_steps)
    } else if det.inner_height() < CLOSE_ENOUGH_FRACTION * frame_height as f64 {
        go(g.forward_steps, g.forward_steps)
    } else {
        CommandAst::Stop
    }
}
