//! Target detection: threshold, 4-connected components, largest blob.

use serde::{Deserialize, Serialize};

use super::pipeline::PipelineConfig;
use crate::frame::Frame;

/// Pixels at or above this intensity are foreground.
pub const THRESHOLD: u8 = 128;

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> u32 {
        self.width() * self.height()
    }
}

/// One foreground component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blob {
    pub bbox: BBox,
    pub pixels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    /// Foreground pixels over bbox area.
    pub fill_ratio: f64,
    /// The bbox after margin shrink, as continuous edges `[x0, y0, x1, y1]`.
    pub inner: [f64; 4],
    /// Midpoint of `inner`, continuous pixel coordinates.
    pub center: (f64, f64),
}

impl Detection {
    pub fn inner_height(&self) -> f64 {
        self.inner[3] - self.inner[1]
    }
}

/// All 4-connected foreground components in scan order of their first pixel.
pub fn components(frame: &Frame, threshold: u8) -> Vec<Blob> {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut blobs = Vec::new();
    for start in 0..w * h {
        if seen[start] || frame.pixels[start] < threshold {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (sx, sy) = ((start % w) as u32, (start / w) as u32);
        let mut bbox = BBox { x0: sx, y0: sy, x1: sx, y1: sy };
        let mut pixels = 0;
        while let Some(i) = stack.pop() {
            pixels += 1;
            let (x, y) = (i % w, i / w);
            bbox.x0 = bbox.x0.min(x as u32);
            bbox.x1 = bbox.x1.max(x as u32);
            bbox.y0 = bbox.y0.min(y as u32);
            bbox.y1 = bbox.y1.max(y as u32);
            let mut visit = |j: usize| {
                if !seen[j] && frame.pixels[j] >= threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        blobs.push(Blob { bbox, pixels });
    }
    blobs
}

/// Largest component (first in scan order on ties), before any acceptance test.
pub fn largest_blob(frame: &Frame) -> Option<Blob> {
    components(frame, THRESHOLD)
        .into_iter()
        .reduce(|best, b| if b.pixels > best.pixels { b } else { best })
}

/// Describes a blob under the configured margins, without the confidence test.
pub fn describe(blob: &Blob, config: &PipelineConfig) -> Detection {
    let b = blob.bbox;
    let m = config.margins.fraction();
    let (bw, bh) = (b.width() as f64, b.height() as f64);
    let inner = [
        b.x0 as f64 + m * bw,
        b.y0 as f64 + m * bh,
        (b.x1 + 1) as f64 - m * bw,
        (b.y1 + 1) as f64 - m * bh,
    ];
    Detection {
        bbox: b,
        fill_ratio: blob.pixels as f64 / b.area() as f64,
        inner,
        center: (0.5 * (inner[0] + inner[2]), 0.5 * (inner[1] + inner[3])),
    }
}

/// The largest blob, if its fill ratio meets the configured confidence.
pub fn detect(frame: &Frame, config: &PipelineConfig) -> Option<Detection> {
    let det = describe(&largest_blob(frame)?, config);
    (det.fill_ratio >= config.confidence.threshold()).then_some(det)
}
