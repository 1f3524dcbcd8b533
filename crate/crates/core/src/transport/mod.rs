//! Byte-stream links: BLE-style MTU chunking, line framing, the TCP command
//! link and the multipart camera stream.

mod chunk;
mod chunked;
mod lines;
mod link;
pub mod multipart;
mod slot;

pub use chunk::{chunk, reassemble, Chunk, DEFAULT_MTU};
pub use lines::{split_lines, FramingError, Line, LineSplitter};
pub use link::{serve_link_tcp, DeviceRequest, LinkServer};
pub use multipart::{
    encode_part, open_stream, parse_multipart, serve_frames_multipart, FrameServer, MultipartError,
    MultipartParser, MultipartReader, PartEvent, BOUNDARY,
};
pub use slot::FrameSlot;
