//! The command link: a TCP stand-in for the BLE-UART radio.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::chunk::{chunk, reassemble};
use super::lines::{Line, LineSplitter};

/// One framed command on its way to the device, with the channel its
/// response goes back on.
#[derive(Debug)]
pub struct DeviceRequest {
    pub line: Line,
    pub reply: Sender<String>,
}

impl DeviceRequest {
    pub fn new(line: Line) -> (Self, Receiver<String>) {
        let (reply, rx) = mpsc::channel();
        (Self { line, reply }, rx)
    }
}

pub struct LinkServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl LinkServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
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

impl Drop for LinkServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Accepts one client at a time on `addr`. Inbound bytes are cut into
/// `mtu`-sized chunks and reassembled (as the radio would), split into lines
/// and queued to the device; responses go back in order, also chunked.
/// A disconnect returns the server to accepting.
pub fn serve_link_tcp(
    addr: impl ToSocketAddrs,
    requests: Sender<DeviceRequest>,
    mtu: usize,
) -> io::Result<LinkServer> {
    assert!(mtu >= 1);
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_thread = stop.clone();
    let handle = thread::Builder::new()
        .name("link-server".into())
        .spawn(move || {
            while !stop_thread.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        // serviced inline: a second client waits in the backlog
                        let _ = serve_client(stream, &requests, mtu, &stop_thread);
                    }
                    Err(_) => thread::sleep(Duration::from_millis(5)),
                }
            }
        })?;
    Ok(LinkServer {
        addr: local,
        stop,
        handle: Some(handle),
    })
}

fn serve_client(
    mut stream: TcpStream,
    requests: &Sender<DeviceRequest>,
    mtu: usize,
    stop: &AtomicBool,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_millis(2)))?;
    let mut splitter = LineSplitter::new();
    let mut pending: VecDeque<Receiver<String>> = VecDeque::new();
    let mut buf = [0u8; 512];
    while !stop.load(Ordering::Relaxed) {
        match stream.read(&mut buf) {
            Ok(0) => return Ok(()),
            Ok(n) => {
                let packets = chunk(&buf[..n], mtu);
                for line in splitter.push(&reassemble(&packets)) {
                    let (req, rx) = DeviceRequest::new(line);
                    if requests.send(req).is_err() {
                        // device gone: drop the client
                        return Ok(());
                    }
                    pending.push_back(rx);
                }
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e),
        }
        while let Some(rx) = pending.front() {
            match rx.try_recv() {
                Ok(response) => {
                    for packet in chunk(response.as_bytes(), mtu) {
                        stream.write_all(packet.as_bytes())?;
                    }
                    pending.pop_front();
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    pending.pop_front();
                }
            }
        }
    }
    Ok(())
}
