//! The IP-camera path: frames as an unending `multipart/x-mixed-replace`
//! HTTP response, one binary PGM per part.
//!
//! Each part looks like
//!
//! ```text
//! --curioframe\r\n
//! Content-Type: image/x-portable-graymap\r\n
//! Content-Length: <n>\r\n
//! X-Timestamp: <simulated seconds>\r\n
//! \r\n
//! <n bytes of PGM>\r\n
//! ```
//!
//! The parser relies on `Content-Length` rather than scanning for the
//! boundary, so it does not care what image format the body holds.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::chunked::ChunkedReader;
use super::slot::FrameSlot;
use crate::frame::{Frame, PgmError};

pub const BOUNDARY: &str = "curioframe";
pub const PGM_CONTENT_TYPE: &str = "image/x-portable-graymap";
pub const STREAM_PATH: &str = "/stream";

const MAX_HEADER_BLOCK: usize = 16 * 1024;

pub fn stream_content_type() -> String {
    format!("multipart/x-mixed-replace; boundary={BOUNDARY}")
}

/// Status line and headers that open the stream.
pub fn response_head() -> Vec<u8> {
    format!(
        "HTTP/1.1 200 OK\r\nContent-Type: {}\r\nCache-Control: no-cache\r\nConnection: close\r\n\r\n",
        stream_content_type()
    )
    .into_bytes()
}

/// Encodes one frame as a complete part. Returns `None` when the body happens
/// to contain the boundary delimiter; such frames are dropped.
pub fn encode_part(frame: &Frame) -> Option<Vec<u8>> {
    let body = frame.to_pgm();
    let delim = format!("--{BOUNDARY}");
    if body.windows(delim.len()).any(|w| w == delim.as_bytes()) {
        return None;
    }
    let mut part = format!(
        "--{BOUNDARY}\r\nContent-Type: {PGM_CONTENT_TYPE}\r\nContent-Length: {}\r\nX-Timestamp: {}\r\n\r\n",
        body.len(),
        frame.timestamp
    )
    .into_bytes();
    part.extend_from_slice(&body);
    part.extend_from_slice(b"\r\n");
    Some(part)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartEvent {
    Frame(Frame),
    /// A well-framed part whose content type is not an image we decode.
    Skipped { content_type: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultipartError {
    #[error("malformed part header: {0}")]
    MalformedHeader(String),
    #[error("boundary mismatch: expected `--{expected}`, found `{found}`")]
    BoundaryMismatch { expected: String, found: String },
    #[error("truncated part: {0}")]
    TruncatedPart(String),
    #[error("bad image in part: {0}")]
    BadImage(PgmError),
    #[error("bad HTTP response: {0}")]
    BadResponse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("timed out waiting for data")]
    TimedOut,
}

#[derive(Debug, Clone)]
enum State {
    /// Before the first delimiter, or between parts.
    Boundary,
    Headers,
    Body {
        content_type: String,
        len: usize,
        timestamp: f64,
    },
    /// Discarding until the next delimiter line after an error.
    Resync,
    Done,
}

/// Push-based multipart parser. Feed bytes with [`push`](Self::push) and pull
/// events with [`next_event`](Self::next_event). Every error is recoverable:
/// the parser resynchronises at the next delimiter.
#[derive(Debug)]
pub struct MultipartParser {
    delim: Vec<u8>,
    buf: Vec<u8>,
    state: State,
}

impl MultipartParser {
    pub fn new(boundary: &str) -> Self {
        Self {
            delim: format!("--{boundary}").into_bytes(),
            buf: Vec::new(),
            state: State::Boundary,
        }
    }

    pub fn push(&mut self, data: &[u8]) {
        self.buf.extend_from_slice(data);
    }

    pub fn is_done(&self) -> bool {
        matches!(self.state, State::Done)
    }

    fn boundary_name(&self) -> String {
        String::from_utf8_lossy(&self.delim[2..]).into_owned()
    }

    /// Returns the next event, or `None` when more input is needed (or, with
    /// `eof`, when the stream is exhausted).
    pub fn next_event(&mut self, eof: bool) -> Option<Result<PartEvent, MultipartError>> {
        loop {
            match self.state.clone() {
                State::Done => return None,
                State::Boundary => {
                    let Some(end) = self.buf.iter().position(|&b| b == b'\n') else {
                        if eof {
                            self.buf.clear();
                            self.state = State::Done;
                        }
                        return None;
                    };
                    let line = trim_cr(&self.buf[..end]).to_vec();
                    self.buf.drain(..=end);
                    if line == self.delim {
                        self.state = State::Headers;
                    } else if line.len() == self.delim.len() + 2
                        && line.starts_with(&self.delim)
                        && line.ends_with(b"--")
                    {
                        self.state = State::Done;
                        return None;
                    } else if line.starts_with(b"--") {
                        self.state = State::Resync;
                        return Some(Err(MultipartError::BoundaryMismatch {
                            expected: self.boundary_name(),
                            found: String::from_utf8_lossy(&line).into_owned(),
                        }));
                    }
                    // anything else is preamble or blank padding
                }
                State::Headers => match self.take_headers(eof) {
                    None => return None,
                    Some(Ok(next)) => self.state = next,
                    Some(Err(e)) => {
                        self.state = State::Resync;
                        return Some(Err(e));
                    }
                },
                State::Body {
                    content_type,
                    len,
                    timestamp,
                } => {
                    // need the body plus its CRLF terminator (or end of stream)
                    let avail = self.buf.len();
                    if avail < len + 2 && !eof {
                        if avail >= len && self.buf[len..].iter().all(|b| matches!(b, b'\r' | b'\n')) {
                            return None;
                        }
                        if avail < len {
                            return None;
                        }
                    }
                    if avail < len {
                        self.buf.clear();
                        self.state = State::Done;
                        return Some(Err(MultipartError::TruncatedPart(format!(
                            "stream ended after {avail} of {len} body bytes"
                        ))));
                    }
                    let tail = &self.buf[len..];
                    let terminated = tail.starts_with(b"\r\n")
                        || tail.starts_with(b"\n")
                        || (eof && tail.is_empty());
                    if !terminated {
                        self.state = State::Resync;
                        return Some(Err(MultipartError::TruncatedPart(
                            "body does not end where Content-Length says".into(),
                        )));
                    }
                    let event = if content_type.eq_ignore_ascii_case(PGM_CONTENT_TYPE) {
                        match Frame::from_pgm(&self.buf[..len]) {
                            Ok(mut frame) => {
                                frame.timestamp = timestamp;
                                Ok(PartEvent::Frame(frame))
                            }
                            Err(PgmError::Truncated { expected, found }) => {
                                self.state = State::Resync;
                                return Some(Err(MultipartError::TruncatedPart(format!(
                                    "image needs {expected} raster bytes, part carries {found}"
                                ))));
                            }
                            Err(e) => Err(MultipartError::BadImage(e)),
                        }
                    } else {
                        Ok(PartEvent::Skipped { content_type })
                    };
                    let consumed = len + if tail.starts_with(b"\r\n") { 2 } else { tail.len().min(1) };
                    self.buf.drain(..consumed);
                    self.state = State::Boundary;
                    return Some(event);
                }
                State::Resync => {
                    if let Some(pos) = find_delimiter_line(&self.buf, &self.delim) {
                        self.buf.drain(..pos);
                        self.state = State::Boundary;
                    } else {
                        let keep = self.delim.len() + 1;
                        if self.buf.len() > keep {
                            let cut = self.buf.len() - keep;
                            self.buf.drain(..cut);
                        }
                        if eof {
                            self.buf.clear();
                            self.state = State::Done;
                        }
                        return None;
                    }
                }
            }
        }
    }

    fn take_headers(&mut self, eof: bool) -> Option<Result<State, MultipartError>> {
        // find the blank line ending the header block
        let mut pos = 0;
        let mut lines = Vec::new();
        let end = loop {
            let Some(nl) = self.buf[pos..].iter().position(|&b| b == b'\n') else {
                if eof {
                    return Some(Err(MultipartError::TruncatedPart(
                        "stream ended inside part headers".into(),
                    )));
                }
                if self.buf.len() > MAX_HEADER_BLOCK {
                    return Some(Err(MultipartError::MalformedHeader(
                        "header block too large".into(),
                    )));
                }
                return None;
            };
            let line = trim_cr(&self.buf[pos..pos + nl]);
            if line.is_empty() {
                break pos + nl + 1;
            }
            lines.push(String::from_utf8_lossy(line).into_owned());
            pos += nl + 1;
        };
        self.buf.drain(..end);

        let mut content_type = None;
        let mut len = None;
        let mut timestamp = 0.0;
        for line in lines {
            let Some((name, value)) = line.split_once(':') else {
                return Some(Err(MultipartError::MalformedHeader(format!(
                    "header line without ':': `{line}`"
                ))));
            };
            let value = value.trim();
            match name.trim().to_ascii_lowercase().as_str() {
                "content-type" => content_type = Some(value.to_string()),
                "content-length" => match value.parse::<usize>() {
                    Ok(n) => len = Some(n),
                    Err(_) => {
                        return Some(Err(MultipartError::MalformedHeader(format!(
                            "bad Content-Length `{value}`"
                        ))))
                    }
                },
                "x-timestamp" => match value.parse::<f64>() {
                    Ok(t) => timestamp = t,
                    Err(_) => {
                        return Some(Err(MultipartError::MalformedHeader(format!(
                            "bad X-Timestamp `{value}`"
                        ))))
                    }
                },
                _ => {}
            }
        }
        let Some(len) = len else {
            return Some(Err(MultipartError::MalformedHeader(
                "missing Content-Length".into(),
            )));
        };
        Some(Ok(State::Body {
            content_type: content_type.unwrap_or_default(),
            len,
            timestamp,
        }))
    }
}

fn trim_cr(line: &[u8]) -> &[u8] {
    line.strip_suffix(b"\r").unwrap_or(line)
}

/// Offset of a line starting with `delim`, if one is buffered.
fn find_delimiter_line(buf: &[u8], delim: &[u8]) -> Option<usize> {
    if buf.starts_with(delim) {
        return Some(0);
    }
    buf.windows(delim.len() + 1)
        .position(|w| w[0] == b'\n' && &w[1..] == delim)
        .map(|p| p + 1)
}

enum Body<R> {
    Raw(R),
    Chunked(ChunkedReader<R>),
}

impl<R: Read> Read for Body<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self {
            Body::Raw(r) => r.read(buf),
            Body::Chunked(r) => r.read(buf),
        }
    }
}

/// Reads frames from an HTTP multipart response.
pub struct MultipartReader<R> {
    inner: Body<R>,
    parser: MultipartParser,
    eof: bool,
    /// Content types of skipped parts, most recent last.
    pub skipped: Vec<String>,
}

impl<R: Read> MultipartReader<R> {
    /// Consumes the HTTP status line and headers and takes the boundary from
    /// the `Content-Type` header.
    pub fn from_http(mut inner: R) -> Result<Self, MultipartError> {
        let mut head = Vec::new();
        let mut byte = [0u8; 1];
        // byte-at-a-time so nothing past the head is consumed from `inner`
        while !head.ends_with(b"\r\n\r\n") {
            if head.len() > MAX_HEADER_BLOCK {
                return Err(MultipartError::BadResponse("response head too large".into()));
            }
            match inner.read(&mut byte) {
                Ok(0) => {
                    return Err(MultipartError::BadResponse(
                        "connection closed before response head".into(),
                    ))
                }
                Ok(_) => head.push(byte[0]),
                Err(e) => return Err(io_error(e)),
            }
        }
        let mut headers = [httparse::EMPTY_HEADER; 32];
        let mut resp = httparse::Response::new(&mut headers);
        resp.parse(&head)
            .map_err(|e| MultipartError::BadResponse(e.to_string()))?;
        if resp.code != Some(200) {
            return Err(MultipartError::BadResponse(format!(
                "status {}",
                resp.code.unwrap_or(0)
            )));
        }
        let content_type = resp
            .headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case("content-type"))
            .map(|h| String::from_utf8_lossy(h.value).into_owned())
            .ok_or_else(|| MultipartError::BadResponse("missing Content-Type".into()))?;
        let boundary = boundary_param(&content_type).ok_or_else(|| {
            MultipartError::BadResponse(format!("no multipart boundary in `{content_type}`"))
        })?;
        let chunked = resp.headers.iter().any(|h| {
            h.name.eq_ignore_ascii_case("transfer-encoding")
                && String::from_utf8_lossy(h.value).to_ascii_lowercase().contains("chunked")
        });
        let body = if chunked {
            Body::Chunked(ChunkedReader::new(inner))
        } else {
            Body::Raw(inner)
        };
        Ok(Self::new(body, &boundary))
    }

    fn new(inner: Body<R>, boundary: &str) -> Self {
        Self {
            inner,
            parser: MultipartParser::new(boundary),
            eof: false,
            skipped: Vec::new(),
        }
    }

    /// For a body that starts directly with the first delimiter.
    pub fn with_boundary(inner: R, boundary: &str) -> Self {
        Self::new(Body::Raw(inner), boundary)
    }

    /// Next event, reading more input as needed. `None` at a clean end.
    pub fn next_event(&mut self) -> Option<Result<PartEvent, MultipartError>> {
        let mut chunk = [0u8; 16 * 1024];
        loop {
            if let Some(ev) = self.parser.next_event(self.eof) {
                return Some(ev);
            }
            if self.eof || self.parser.is_done() {
                return None;
            }
            match self.inner.read(&mut chunk) {
                Ok(0) => self.eof = true,
                Ok(n) => self.parser.push(&chunk[..n]),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(io_error(e))),
            }
        }
    }

    /// Next decoded frame; skipped parts are recorded in `skipped`.
    pub fn next_frame(&mut self) -> Option<Result<Frame, MultipartError>> {
        loop {
            match self.next_event()? {
                Ok(PartEvent::Frame(f)) => return Some(Ok(f)),
                Ok(PartEvent::Skipped { content_type }) => self.skipped.push(content_type),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

impl<R: Read> Iterator for MultipartReader<R> {
    type Item = Result<PartEvent, MultipartError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_event()
    }
}

/// Parses a complete HTTP multipart response into its events.
pub fn parse_multipart<R: Read>(source: R) -> Result<MultipartReader<R>, MultipartError> {
    MultipartReader::from_http(source)
}

fn io_error(e: io::Error) -> MultipartError {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => MultipartError::TimedOut,
        _ => MultipartError::Io(e.to_string()),
    }
}

fn boundary_param(content_type: &str) -> Option<String> {
    let (kind, params) = content_type.split_once(';')?;
    if !kind.trim().to_ascii_lowercase().starts_with("multipart/") {
        return None;
    }
    params.split(';').find_map(|p| {
        let (k, v) = p.split_once('=')?;
        k.trim()
            .eq_ignore_ascii_case("boundary")
            .then(|| v.trim().trim_matches('"').to_string())
    })
}

/// Writes the stream to `out` until the slot closes, `stop` is set, or the
/// peer goes away. Only the newest frame is sent; intermediate ones are dropped.
pub fn write_stream<W: Write>(slot: &FrameSlot, out: &mut W, stop: &AtomicBool) -> io::Result<()> {
    out.write_all(&response_head())?;
    out.flush()?;
    let mut seen = 0;
    while !stop.load(Ordering::Relaxed) {
        let Some((seq, frame)) = slot.wait_newer(seen, Duration::from_millis(100)) else {
            if slot.is_closed() {
                break;
            }
            continue;
        };
        seen = seq;
        if let Some(part) = encode_part(&frame) {
            out.write_all(&part)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// A running frame server. Dropping it stops accepting new clients.
pub struct FrameServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl FrameServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}{STREAM_PATH}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for FrameServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Serves `GET /stream` from `slot` on `addr`. Port 0 picks a free port.
pub fn serve_frames_multipart(slot: FrameSlot, addr: impl ToSocketAddrs) -> io::Result<FrameServer> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_accept = stop.clone();
    let handle = thread::Builder::new()
        .name("frame-server".into())
        .spawn(move || {
            while !stop_accept.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let slot = slot.clone();
                        let stop = stop_accept.clone();
                        thread::spawn(move || {
                            let _ = handle_frame_client(stream, &slot, &stop);
                        });
                    }
                    Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(5))
                    }
                    Err(_) => thread::sleep(Duration::from_millis(5)),
                }
            }
        })?;
    Ok(FrameServer {
        addr: local,
        stop,
        handle: Some(handle),
    })
}

fn handle_frame_client(mut stream: TcpStream, slot: &FrameSlot, stop: &AtomicBool) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(2)))?;
    let mut head = Vec::new();
    let mut buf = [0u8; 1024];
    let path = loop {
        let n = stream.read(&mut buf)?;
        if n == 0 {
            return Ok(());
        }
        head.extend_from_slice(&buf[..n]);
        let mut headers = [httparse::EMPTY_HEADER; 32];
        let mut req = httparse::Request::new(&mut headers);
        match req.parse(&head) {
            Ok(httparse::Status::Complete(_)) => break req.path.unwrap_or("").to_string(),
            Ok(httparse::Status::Partial) if head.len() < MAX_HEADER_BLOCK => continue,
            _ => {
                stream.write_all(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")?;
                return Ok(());
            }
        }
    };
    if path != STREAM_PATH {
        stream.write_all(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")?;
        return Ok(());
    }
    stream.set_nodelay(true)?;
    write_stream(slot, &mut stream, stop)
}

/// A client connection to a frame server URL such as
/// `http://127.0.0.1:8080/stream`.
pub fn open_stream(url: &str, timeout: Duration) -> Result<MultipartReader<TcpStream>, MultipartError> {
    let rest = url.strip_prefix("http://").unwrap_or(url);
    let (host, path) = match rest.find('/') {
        Some(i) => (&rest[..i], &rest[i..]),
        None => (rest, STREAM_PATH),
    };
    let addr = host
        .to_socket_addrs()
        .map_err(|e| MultipartError::Io(format!("{host}: {e}")))?
        .next()
        .ok_or_else(|| MultipartError::Io(format!("{host}: no address")))?;
    let mut stream = TcpStream::connect_timeout(&addr, timeout).map_err(io_error)?;
    stream.set_read_timeout(Some(timeout)).map_err(io_error)?;
    stream
        .write_all(format!("GET {path} HTTP/1.1\r\nHost: {host}\r\nAccept: */*\r\n\r\n").as_bytes())
        .map_err(io_error)?;
    MultipartReader::from_http(stream)
}
