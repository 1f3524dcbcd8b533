//! Newline framing of command strings.

use crate::command::MAX_COMMAND_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FramingError {
    #[error("line exceeds {MAX_COMMAND_LEN} bytes")]
    Oversized,
    #[error("line is not valid UTF-8")]
    InvalidUtf8,
}

pub type Line = Result<String, FramingError>;

/// Incremental line splitter. Feed arbitrary fragments; complete lines come
/// out with the newline (and a trailing `\r`, if any) removed. A line longer
/// than [`MAX_COMMAND_LEN`] is discarded up to its newline and reported once
/// as [`FramingError::Oversized`].
#[derive(Debug, Default, Clone)]
pub struct LineSplitter {
    buf: Vec<u8>,
    discarding: bool,
}

impl LineSplitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<Line> {
        let mut out = Vec::new();
        for &b in bytes {
            if b == b'\n' {
                if self.discarding {
                    self.discarding = false;
                    out.push(Err(FramingError::Oversized));
                } else {
                    let mut line = std::mem::take(&mut self.buf);
                    if line.last() == Some(&b'\r') {
                        line.pop();
                    }
                    if line.len() > MAX_COMMAND_LEN {
                        out.push(Err(FramingError::Oversized));
                        continue;
                    }
                    out.push(String::from_utf8(line).map_err(|_| FramingError::InvalidUtf8));
                }
            } else if !self.discarding {
                self.buf.push(b);
                if self.buf.len() > MAX_COMMAND_LEN + 1 {
                    self.buf.clear();
                    self.discarding = true;
                }
            }
        }
        out
    }

    /// Bytes buffered without a terminating newline yet.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

/// Splits a complete byte stream. Any unterminated tail is dropped.
pub fn split_lines(stream: &[u8]) -> Vec<Line> {
    LineSplitter::new().push(stream)
}
