//! The closed tracking loop: frame → preprocess → detect → decide → send.

use std::io::Read;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::connection::{ClientConnection, DeviceLink, LinkError};
use super::decide::{center_error, deadband_px, decide};
use super::detect::detect;
use super::pipeline::{preprocess, PipelineConfig};
use crate::command::CommandAst;
use crate::frame::Frame;
use crate::transport::{open_stream, FrameSlot, MultipartError, MultipartReader};

/// How long the error must stay inside the deadband to count as converged.
pub const CONVERGENCE_WINDOW_S: f64 = 1.0;
pub const STARVATION_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameSourceError {
    #[error("no frame for {0:?}")]
    Starved(Duration),
    #[error("frame source closed")]
    Closed,
    #[error("camera stream: {0}")]
    Stream(MultipartError),
}

pub trait FrameSource {
    /// Blocks for the next (newest) frame.
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError>;
}

impl<F: FrameSource + ?Sized> FrameSource for Box<F> {
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError> {
        (**self).next_frame()
    }
}

/// Reads from a latest-value slot, waiting for a frame it has not seen.
pub struct SlotCamera {
    slot: FrameSlot,
    seen: u64,
    timeout: Duration,
}

impl SlotCamera {
    pub fn new(slot: FrameSlot) -> Self {
        Self {
            slot,
            seen: 0,
            timeout: STARVATION_TIMEOUT,
        }
    }
}

impl FrameSource for SlotCamera {
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError> {
        match self.slot.wait_newer(self.seen, self.timeout) {
            Some((seq, frame)) => {
                self.seen = seq;
                Ok((*frame).clone())
            }
            None if self.slot.is_closed() => Err(FrameSourceError::Closed),
            None => Err(FrameSourceError::Starved(self.timeout)),
        }
    }
}

/// An HTTP camera stream. Damaged parts are skipped; the reader resynchronises
/// on its own.
impl<R: Read> FrameSource for MultipartReader<R> {
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError> {
        loop {
            match MultipartReader::next_frame(self) {
                None => return Err(FrameSourceError::Closed),
                Some(Ok(frame)) => return Ok(frame),
                Some(Err(MultipartError::TimedOut)) => {
                    return Err(FrameSourceError::Starved(STARVATION_TIMEOUT))
                }
                Some(Err(e @ (MultipartError::Io(_) | MultipartError::BadResponse(_)))) => {
                    return Err(FrameSourceError::Stream(e))
                }
                Some(Err(_)) => continue,
            }
        }
    }
}

/// A camera URL read on a background thread into a [`FrameSlot`], so the
/// loop always gets the newest frame rather than a backlog.
pub struct HttpCamera {
    slot: SlotCamera,
    fault: Arc<Mutex<Option<MultipartError>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl HttpCamera {
    pub fn open(url: &str, timeout: Duration) -> Result<Self, MultipartError> {
        let mut reader = open_stream(url, timeout)?;
        let slot = FrameSlot::new();
        let fault = Arc::new(Mutex::new(None));
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let (slot, fault, stop) = (slot.clone(), fault.clone(), stop.clone());
            thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match reader.next_frame() {
                        None => break,
                        Some(Ok(frame)) => slot.publish(frame),
                        Some(Err(e @ (MultipartError::Io(_) | MultipartError::BadResponse(_)))) => {
                            *fault.lock().unwrap() = Some(e);
                            break;
                        }
                        Some(Err(_)) => {}
                    }
                }
                slot.close();
            })
        };
        Ok(Self {
            slot: SlotCamera::new(slot),
            fault,
            stop,
            thread: Some(thread),
        })
    }
}

impl FrameSource for HttpCamera {
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError> {
        self.slot.next_frame().map_err(|e| match (e, self.fault.lock().unwrap().clone()) {
            (FrameSourceError::Closed, Some(fault)) => FrameSourceError::Stream(fault),
            (e, _) => e,
        })
    }
}

impl Drop for HttpCamera {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        // the reader thread notices within one socket read timeout
        drop(self.thread.take());
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics {
    /// Fraction of processed frames with an accepted detection.
    pub visibility_fraction: f64,
    /// Mean |centre column - image centre| over accepted detections, pixels.
    pub mean_abs_center_err: f64,
    /// Session time at which the error entered the deadband and then stayed
    /// there for [`CONVERGENCE_WINDOW_S`].
    pub convergence_time: Option<f64>,
    pub commands_sent: u64,
    pub frames_processed: u64,
    /// Visibility over frames from `convergence_time` on.
    pub post_convergence_visibility: Option<f64>,
}

#[derive(Debug, Default, Clone)]
struct Accumulator {
    frames: u64,
    visible: u64,
    err_sum: f64,
    commands: u64,
    band_start: Option<f64>,
    band_frames: u64,
    converged_at: Option<f64>,
    post_frames: u64,
    post_visible: u64,
}

impl Accumulator {
    fn observe(&mut self, t: f64, err: Option<f64>, deadband: f64) {
        self.frames += 1;
        if let Some(e) = err {
            self.visible += 1;
            self.err_sum += e.abs();
        }
        if self.converged_at.is_some() {
            self.post_frames += 1;
            self.post_visible += err.is_some() as u64;
            return;
        }
        match err {
            Some(e) if e.abs() <= deadband => {
                let start = *self.band_start.get_or_insert(t);
                self.band_frames += 1;
                if t - start >= CONVERGENCE_WINDOW_S - 1e-9 {
                    self.converged_at = Some(start);
                    // every frame of the window was visible
                    self.post_frames = self.band_frames;
                    self.post_visible = self.band_frames;
                }
            }
            _ => {
                self.band_start = None;
                self.band_frames = 0;
            }
        }
    }

    fn metrics(&self) -> TrackingMetrics {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        TrackingMetrics {
            visibility_fraction: ratio(self.visible, self.frames),
            mean_abs_center_err: if self.visible == 0 {
                0.0
            } else {
                self.err_sum / self.visible as f64
            },
            convergence_time: self.converged_at,
            commands_sent: self.commands,
            frames_processed: self.frames,
            post_convergence_visibility: self
                .converged_at
                .map(|_| ratio(self.post_visible, self.post_frames)),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrackError {
    #[error("device link lost: {source}")]
    LinkLost {
        #[source]
        source: LinkError,
        metrics: TrackingMetrics,
    },
    #[error("camera: {source}")]
    Camera {
        #[source]
        source: FrameSourceError,
        metrics: TrackingMetrics,
    },
}

impl TrackError {
    /// Metrics gathered before the session aborted.
    pub fn metrics(&self) -> &TrackingMetrics {
        match self {
            TrackError::LinkLost { metrics, .. } | TrackError::Camera { metrics, .. } => metrics,
        }
    }
}

/// Per-iteration hooks for live sessions.
pub trait TrackHooks {
    /// Configuration for this iteration, read at loop top.
    fn config(&mut self) -> PipelineConfig;
    fn publish(&mut self, _metrics: &TrackingMetrics) {}
    fn cancelled(&mut self) -> bool {
        false
    }
}

impl TrackHooks for PipelineConfig {
    fn config(&mut self) -> PipelineConfig {
        *self
    }
}

/// One iteration's outcome, for callers that want a per-frame log.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub time: f64,
    pub command: CommandAst,
    pub sent: bool,
    pub center_error: Option<f64>,
}

pub fn track<L: DeviceLink, F: FrameSource + ?Sized>(
    conn: &mut ClientConnection<L>,
    frames: &mut F,
    config: &PipelineConfig,
    duration: f64,
) -> Result<TrackingMetrics, TrackError> {
    track_with(conn, frames, &mut config.clone(), duration, |_| {})
}

/// Runs the loop until `duration` seconds of frame time have passed (measured
/// from the first frame), the hooks cancel, or the link or camera fails.
/// A `stop()` decision that repeats the previous command is not resent.
pub fn track_with<L: DeviceLink, F: FrameSource + ?Sized, H: TrackHooks + ?Sized>(
    conn: &mut ClientConnection<L>,
    frames: &mut F,
    hooks: &mut H,
    duration: f64,
    mut on_step: impl FnMut(&Step),
) -> Result<TrackingMetrics, TrackError> {
    let mut acc = Accumulator::default();
    if !(duration > 0.0) {
        return Ok(acc.metrics());
    }
    let mut start = None;
    let mut last_sent: Option<CommandAst> = None;
    loop {
        if hooks.cancelled() {
            break;
        }
        let config = hooks.config();
        let frame = frames.next_frame().map_err(|source| TrackError::Camera {
            source,
            metrics: acc.metrics(),
        })?;
        let t = frame.timestamp - *start.get_or_insert(frame.timestamp);
        if t >= duration {
            break;
        }
        let view = preprocess(&frame, &config);
        let det = detect(&view, &config);
        let command = decide(det.as_ref(), &config, view.width, view.height);
        let err = det.as_ref().map(|d| center_error(d, view.width));

        let repeat_stop = command == CommandAst::Stop && last_sent == Some(CommandAst::Stop);
        if !repeat_stop {
            match conn.send(&command) {
                Ok(()) | Err(LinkError::Device(_)) => {}
                Err(source) => {
                    return Err(TrackError::LinkLost {
                        source,
                        metrics: acc.metrics(),
                    })
                }
            }
            acc.commands += 1;
            last_sent = Some(command);
        }
        acc.observe(t, err, deadband_px(view.width));
        on_step(&Step {
            time: t,
            command,
            sent: !repeat_stop,
            center_error: err,
        });
        hooks.publish(&acc.metrics());
    }
    Ok(acc.metrics())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_run(samples: &[(f64, Option<f64>)]) -> TrackingMetrics {
        let mut acc = Accumulator::default();
        for &(t, e) in samples {
            acc.observe(t, e, 32.0);
        }
        acc.metrics()
    }

    #[test]
    fn empty_metrics_are_zero() {
        let m = acc_run(&[]);
        assert_eq!(m, TrackingMetrics::default());
    }

    #[test]
    fn convergence_needs_a_full_second() {
        let mut s: Vec<_> = (0..10).map(|i| (i as f64 * 0.1, Some(5.0))).collect();
        assert_eq!(acc_run(&s).convergence_time, None);
        s.push((1.0, Some(5.0)));
        assert_eq!(acc_run(&s).convergence_time, Some(0.0));
    }

    #[test]
    fn a_miss_restarts_the_window() {
        let mut s = vec![(0.0, Some(1.0)), (0.1, None)];
        s.extend((2..=12).map(|i| (i as f64 * 0.1, Some(-3.0))));
        let m = acc_run(&s);
        assert!((m.convergence_time.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(m.post_convergence_visibility, Some(1.0));
        let mut s2 = s.clone();
        s2.extend((13..=16).map(|i| (i as f64 * 0.1, None)));
        // 11 visible window frames, then 4 misses
        assert_eq!(acc_run(&s2).post_convergence_visibility, Some(11.0 / 15.0));
    }

    #[test]
    fn out_of_band_resets() {
        let mut s: Vec<_> = (0..8).map(|i| (i as f64 * 0.1, Some(5.0))).collect();
        s.push((0.8, Some(50.0)));
        s.extend((9..=18).map(|i| (i as f64 * 0.1, Some(5.0))));
        let m = acc_run(&s);
        assert_eq!(m.convergence_time, None);
        assert!((m.mean_abs_center_err - (18.0 * 5.0 + 50.0) / 19.0).abs() < 1e-12);
        assert_eq!(m.visibility_fraction, 1.0);
    }
}
