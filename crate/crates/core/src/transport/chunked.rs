//! `Transfer-Encoding: chunked` response bodies.

use std::io::{self, BufRead, BufReader, Read};

/// Decodes a chunked HTTP body. State survives read timeouts, so a caller
/// may retry after `WouldBlock`/`TimedOut`.
pub(crate) struct ChunkedReader<R> {
    inner: BufReader<R>,
    line: Vec<u8>,
    left: u64,
    after_data: bool,
    done: bool,
}

impl<R: Read> ChunkedReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self {
            inner: BufReader::new(inner),
            line: Vec::new(),
            left: 0,
            after_data: false,
            done: false,
        }
    }

    fn next_line(&mut self) -> io::Result<Vec<u8>> {
        let n = self.inner.read_until(b'\n', &mut self.line)?;
        if n == 0 || !self.line.ends_with(b"\n") {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "chunked body cut short"));
        }
        Ok(std::mem::take(&mut self.line))
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

impl<R: Read> Read for ChunkedReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        while self.left == 0 {
            if self.done || buf.is_empty() {
                return Ok(0);
            }
            if self.after_data {
                if self.next_line()?.trim_ascii() != b"" {
                    return Err(invalid("missing CRLF after chunk"));
                }
                self.after_data = false;
            }
            let line = self.next_line()?;
            let text = std::str::from_utf8(&line).map_err(|_| invalid("chunk size not ASCII"))?;
            let size = text.split(';').next().unwrap_or("").trim();
            let size = u64::from_str_radix(size, 16).map_err(|_| invalid("bad chunk size"))?;
            if size == 0 {
                self.done = true;
                return Ok(0);
            }
            self.left = size;
            self.after_data = true;
        }
        let want = buf.len().min(self.left.min(usize::MAX as u64) as usize);
        let n = self.inner.read(&mut buf[..want])?;
        if n == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "chunk cut short"));
        }
        self.left -= n as u64;
        Ok(n)
    }
}
