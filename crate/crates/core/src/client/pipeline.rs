//! The five tunable stages of the tracking activity and image preprocessing.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frame::Frame;
use crate::input::{self, InputError};

/// Mount rotation to undo before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    #[default]
    None,
    Cw90,
    Cw180,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enhance {
    #[default]
    Identity,
    /// +40 on every pixel.
    Brighten,
    /// Linear stretch of [min, max] onto [0, 255].
    Stretch,
}

/// Minimum fill ratio for a detection to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    #[default]
    Medium,
    High,
}

/// Per-side shrink of the detection box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margins {
    Tight,
    #[default]
    Medium,
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Slow,
    #[default]
    Medium,
    Fast,
}

impl Rotation {
    pub const ALL: [Rotation; 3] = [Rotation::None, Rotation::Cw90, Rotation::Cw180];

    /// Clockwise quarter turns that undo this mount rotation.
    fn undo_quarter_turns(self) -> u32 {
        match self {
            Rotation::None => 0,
            Rotation::Cw90 => 3,
            Rotation::Cw180 => 2,
        }
    }
}

impl Enhance {
    pub const ALL: [Enhance; 3] = [Enhance::Identity, Enhance::Brighten, Enhance::Stretch];
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::Low, Confidence::Medium, Confidence::High];

    pub fn threshold(self) -> f64 {
        match self {
            Confidence::Low => 0.30,
            Confidence::Medium => 0.50,
            Confidence::High => 0.70,
        }
    }
}

impl Margins {
    pub const ALL: [Margins; 3] = [Margins::Tight, Margins::Medium, Margins::Wide];

    pub fn fraction(self) -> f64 {
        match self {
            Margins::Tight => 0.0,
            Margins::Medium => 0.10,
            Margins::Wide => 0.20,
        }
    }
}

/// Step counts and speed a response level commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gains {
    pub turn_steps: i32,
    pub forward_steps: i32,
    pub speed: u32,
}

impl Response {
    pub const ALL: [Response; 3] = [Response::Slow, Response::Medium, Response::Fast];

    pub fn gains(self) -> Gains {
        let (turn_steps, forward_steps, speed) = match self {
            Response::Slow => (50, 100, 300),
            Response::Medium => (100, 200, 600),
            Response::Fast => (200, 400, 1200),
        };
        Gains {
            turn_steps,
            forward_steps,
            speed,
        }
    }
}

macro_rules! option_names {
    ($($ty:ty { $($variant:ident => $name:literal),* })*) => {$(
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(<$ty>::$variant => $name),* }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    )*};
}

option_names! {
    Rotation { None => "none", Cw90 => "cw90", Cw180 => "cw180" }
    Enhance { Identity => "identity", Brighten => "brighten", Stretch => "stretch" }
    Confidence { Low => "low", Medium => "medium", High => "high" }
    Margins { Tight => "tight", Medium => "medium", Wide => "wide" }
    Response { Slow => "slow", Medium => "medium", Fast => "fast" }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub rotation: Rotation,
    pub enhance: Enhance,
    pub confidence: Confidence,
    pub margins: Margins,
    pub response: Response,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        input::from_json(text)
    }

    /// All 3^5 combinations, rotation varying slowest.
    pub fn all() -> impl Iterator<Item = PipelineConfig> {
        Rotation::ALL.into_iter().flat_map(|rotation| {
            Enhance::ALL.into_iter().flat_map(move |enhance| {
                Confidence::ALL.into_iter().flat_map(move |confidence| {
                    Margins::ALL.into_iter().flat_map(move |margins| {
                        Response::ALL.into_iter().map(move |response| PipelineConfig {
                            rotation,
                            enhance,
                            confidence,
                            margins,
                            response,
                        })
                    })
                })
            })
        })
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rotation={} enhance={} confidence={} margins={} response={}",
            self.rotation, self.enhance, self.confidence, self.margins, self.response
        )
    }
}

const BRIGHTEN_OFFSET: u8 = 40;

/// Undoes the configured mount rotation, then applies the enhancement.
pub fn preprocess(frame: &Frame, config: &PipelineConfig) -> Frame {
    let mut out = frame.rotated_cw(config.rotation.undo_quarter_turns());
    match config.enhance {
        Enhance::Identity => {}
        Enhance::Brighten => {
            for p in &mut out.pixels {
                *p = p.saturating_add(BRIGHTEN_OFFSET);
            }
        }
        Enhance::Stretch => {
            let (lo, hi) = out
                .pixels
                .iter()
                .fold((u8::MAX, u8::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
            if lo < hi {
                let (lo, span) = (lo as u32, (hi - lo) as u32);
                for p in &mut out.pixels {
                    // rounded integer map of [lo, hi] onto [0, 255]
                    *p = (((*p as u32 - lo) * 255 * 2 + span) / (2 * span)) as u8;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_has_243_distinct_configs() {
        let all: std::collections::HashSet<_> = PipelineConfig::all().collect();
        assert_eq!(all.len(), 243);
    }

    #[test]
    fn json_schema() {
        let c = PipelineConfig::from_json(
            r#"{"rotation":"cw180","enhance":"stretch","confidence":"high","margins":"wide","response":"fast"}"#,
        )
        .unwrap();
        assert_eq!(c.rotation, Rotation::Cw180);
        assert_eq!(c.response, Response::Fast);
        assert_eq!(
            serde_json::to_string(&PipelineConfig::default()).unwrap(),
            r#"{"rotation":"none","enhance":"identity","confidence":"medium","margins":"medium","response":"medium"}"#
        );
        let err = PipelineConfig::from_json(r#"{"confidence":"extreme"}"#).unwrap_err();
        assert_eq!(err.field, "confidence");
        assert!(err.message.contains("unknown variant"));
    }

    #[test]
    fn brighten_clamps() {
        let f = Frame::new(2, 1, vec![250, 10], 0.0);
        let cfg = PipelineConfig {
            enhance: Enhance::Brighten,
            ..Default::default()
        };
        assert_eq!(preprocess(&f, &cfg).pixels, vec![255, 50]);
    }

    #[test]
    fn stretch_constant_frame_unchanged() {
        let f = Frame::filled(3, 3, 77, 0.0);
        let cfg = PipelineConfig {
            enhance: Enhance::Stretch,
            ..Default::default()
        };
        assert_eq!(preprocess(&f, &cfg), f);
    }

    #[test]
    fn stretch_maps_extremes() {
        let f = Frame::new(3, 1, vec![20, 125, 230], 0.0);
        let cfg = PipelineConfig {
            enhance: Enhance::Stretch,
            ..Default::default()
        };
        assert_eq!(preprocess(&f, &cfg).pixels, vec![0, 128, 255]);
    }

    #[test]
    fn cw180_undoes_half_turn() {
        let f = Frame::new(3, 2, vec![1, 2, 3, 4, 5, 6], 0.0);
        let cfg = PipelineConfig {
            rotation: Rotation::Cw180,
            ..Default::default()
        };
        assert_eq!(preprocess(&f.rotated_cw(2), &cfg), f);
        let cfg = PipelineConfig {
            rotation: Rotation::Cw90,
            ..Default::default()
        };
        assert_eq!(preprocess(&f.rotated_cw(1), &cfg), f);
    }

    proptest! {
        #[test]
        fn default_stages_are_identity(px in proptest::collection::vec(any::<u8>(), 12)) {
            let f = Frame::new(4, 3, px, 1.5);
            prop_assert_eq!(preprocess(&f, &PipelineConfig::default()), f);
        }

        #[test]
        fn stretch_is_idempotent_on_full_range(mut px in proptest::collection::vec(any::<u8>(), 16)) {
            px[0] = 0;
            px[1] = 255;
            let f = Frame::new(4, 4, px, 0.0);
            let cfg = PipelineConfig { enhance: Enhance::Stretch, ..Default::default() };
            prop_assert_eq!(preprocess(&f, &cfg), f);
        }
    }
}
