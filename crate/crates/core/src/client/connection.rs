//! Host-side connection to the device.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{RecvTimeoutError, Sender};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::command::{CommandAst, MotionCommand};
use crate::transport::{chunk, DeviceRequest, DEFAULT_MTU};

pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(2);
pub const ACK_TIMEOUT: Duration = Duration::from_secs(1);

#[derive(Debug, thiserror::Error)]
pub enum LinkError {
    #[error("device at {addr} unreachable: {source}")]
    Unreachable {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("no handshake reply within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("handshake rejected: {0}")]
    Handshake(String),
    #[error("link closed")]
    Closed,
    #[error("no acknowledgement within {0:?}")]
    AckTimeout(Duration),
    #[error("device error: {0}")]
    Device(String),
    #[error("link i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Anything that can carry one command line to the device and bring back its
/// response line.
pub trait DeviceLink {
    /// Sends `line` (without newline) and returns the response without its
    /// newline.
    fn transact(&mut self, line: &str, timeout: Duration) -> Result<String, LinkError>;
}

impl<L: DeviceLink + ?Sized> DeviceLink for Box<L> {
    fn transact(&mut self, line: &str, timeout: Duration) -> Result<String, LinkError> {
        (**self).transact(line, timeout)
    }
}

/// TCP link writing MTU-sized packets.
pub struct TcpLink {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
    mtu: usize,
}

impl TcpLink {
    pub fn open(addr: &str, timeout: Duration) -> Result<Self, LinkError> {
        let unreachable = |source| LinkError::Unreachable {
            addr: addr.to_string(),
            source,
        };
        let mut last = None;
        for sock in addr.to_socket_addrs().map_err(unreachable)? {
            match TcpStream::connect_timeout(&sock, timeout) {
                Ok(stream) => {
                    stream.set_nodelay(true)?;
                    let reader = BufReader::new(stream.try_clone()?);
                    return Ok(Self {
                        writer: stream,
                        reader,
                        mtu: DEFAULT_MTU,
                    });
                }
                Err(e) => last = Some(e),
            }
        }
        Err(unreachable(last.unwrap_or_else(|| {
            io::Error::new(io::ErrorKind::NotFound, "no addresses resolved")
        })))
    }
}

impl DeviceLink for TcpLink {
    fn transact(&mut self, line: &str, timeout: Duration) -> Result<String, LinkError> {
        let framed = format!("{line}\n");
        for packet in chunk(framed.as_bytes(), self.mtu) {
            self.writer.write_all(packet.as_bytes()).map_err(closed_or_io)?;
        }
        self.reader.get_ref().set_read_timeout(Some(timeout))?;
        let mut response = String::new();
        match self.reader.read_line(&mut response) {
            Ok(0) => Err(LinkError::Closed),
            Ok(_) if !response.ends_with('\n') => Err(LinkError::Closed),
            Ok(_) => Ok(response.trim_end().to_string()),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                Err(LinkError::AckTimeout(timeout))
            }
            Err(e) => Err(closed_or_io(e)),
        }
    }
}

fn closed_or_io(e: io::Error) -> LinkError {
    match e.kind() {
        io::ErrorKind::BrokenPipe
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::UnexpectedEof => LinkError::Closed,
        _ => LinkError::Io(e),
    }
}

/// In-process link onto a simulator's request queue.
#[derive(Clone)]
pub struct QueueLink {
    requests: Sender<DeviceRequest>,
}

impl QueueLink {
    pub fn new(requests: Sender<DeviceRequest>) -> Self {
        Self { requests }
    }
}

impl DeviceLink for QueueLink {
    fn transact(&mut self, line: &str, timeout: Duration) -> Result<String, LinkError> {
        let (req, rx) = DeviceRequest::new(Ok(line.to_string()));
        self.requests.send(req).map_err(|_| LinkError::Closed)?;
        match rx.recv_timeout(timeout) {
            Ok(r) => Ok(r.trim_end().to_string()),
            Err(RecvTimeoutError::Timeout) => Err(LinkError::AckTimeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(LinkError::Closed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub commands_sent: u64,
    pub errors: u64,
}

/// A device connection with at most one command in flight.
pub struct ClientConnection<L> {
    link: L,
    next_id: u64,
    pending_ack: Option<u64>,
    pub stats: LinkStats,
}

/// Connects over TCP and performs the `stop()` handshake.
pub fn connect(addr: &str) -> Result<ClientConnection<TcpLink>, LinkError> {
    let link = TcpLink::open(addr, HANDSHAKE_TIMEOUT)?;
    ClientConnection::handshake(link)
}

impl<L: DeviceLink> ClientConnection<L> {
    /// Wraps a link and probes it with `stop()`, which must answer `ok`.
    pub fn handshake(link: L) -> Result<Self, LinkError> {
        let mut conn = Self {
            link,
            next_id: 0,
            pending_ack: None,
            stats: LinkStats::default(),
        };
        conn.stats.commands_sent += 1;
        match conn.link.transact("stop()", HANDSHAKE_TIMEOUT) {
            Ok(r) if r == "ok" => Ok(conn),
            Ok(other) => Err(LinkError::Handshake(other)),
            Err(LinkError::AckTimeout(_)) => Err(LinkError::HandshakeTimeout(HANDSHAKE_TIMEOUT)),
            Err(e) => Err(e),
        }
    }

    /// Sends a command and waits for `ok`. A device `err <kind>` reply comes
    /// back as [`LinkError::Device`] carrying `<kind>`.
    pub fn send(&mut self, ast: &CommandAst) -> Result<(), LinkError> {
        let id = self.next_id;
        self.next_id += 1;
        self.pending_ack = Some(id);
        let result = self.link.transact(&ast.to_string(), ACK_TIMEOUT);
        self.pending_ack = None;
        self.stats.commands_sent += 1;
        let outcome = match result {
            Ok(r) if r == "ok" => Ok(()),
            Ok(r) => Err(LinkError::Device(
                r.strip_prefix("err ").unwrap_or(&r).to_string(),
            )),
            Err(e) => Err(e),
        };
        if outcome.is_err() {
            self.stats.errors += 1;
        }
        outcome
    }

    pub fn send_move(&mut self, cmd: MotionCommand) -> Result<(), LinkError> {
        self.send(&CommandAst::Go(cmd))
    }

    pub fn stop(&mut self) -> Result<(), LinkError> {
        self.send(&CommandAst::Stop)
    }

    pub fn pending_ack(&self) -> Option<u64> {
        self.pending_ack
    }

    pub fn link_mut(&mut self) -> &mut L {
        &mut self.link
    }

    pub fn into_link(self) -> L {
        self.link
    }
}
