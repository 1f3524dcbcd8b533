//! A software twin of the Curio educational robot.
//!
//! Curio is a two-wheeled stepper-driven robot carrying a smartphone. It takes
//! string commands such as `go(1000, 1000, 1000)` over a BLE UART link, and
//! the phone streams camera images to a host that closes a tracking loop.
//! This crate provides every piece of that setup in software:
//!
//! - [`command`]: the command language (`go(l, r[, speed])`, `stop()`).
//! - [`sim`]: the virtual device, differential-drive kinematics, a synthetic
//!   camera and deterministic / real-time simulation loops.
//! - [`transport`]: MTU chunking, line framing, the TCP command link and the
//!   multipart PGM camera stream.
//! - [`client`]: the host SDK, including the configurable
//!   preprocess → detect → decide → send tracking pipeline.
//! - [`bench`]: reproducible sessions and the 243-configuration grid.
//! - [`bridge`]: the HTTP/WebSocket API used by the browser console.
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bridge;
pub mod client;
pub mod command;
pub mod frame;
pub mod input;
pub mod sim;
pub mod transport;

pub use command::{CommandAst, MotionCommand};
pub use frame::Frame;
