//! Host side: device connection, vision pipeline and the tracking loop.

pub mod connection;
pub mod decide;
pub mod detect;
pub mod pipeline;
pub mod rig;
pub mod track;

pub use connection::{
    connect, ClientConnection, DeviceLink, LinkError, LinkStats, QueueLink, TcpLink, ACK_TIMEOUT,
    HANDSHAKE_TIMEOUT,
};
pub use decide::{center_error, deadband_px, decide};
pub use detect::{detect, BBox, Blob, Detection};
pub use pipeline::{preprocess, Confidence, Enhance, Gains, Margins, PipelineConfig, Response, Rotation};
pub use rig::{RigCamera, RigLink, RigOptions, SimRig};
pub use track::{
    track, track_with, FrameSource, FrameSourceError, HttpCamera, SlotCamera, Step, TrackError, TrackHooks,
    TrackingMetrics,
};
