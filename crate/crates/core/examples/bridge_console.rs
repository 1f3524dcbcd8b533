//! The bridge a browser console talks to, exercised with plain HTTP
//! requests: switch to teleop, drive, switch to tracking, retune live.
//!
//! Pass `--serve` to keep it running and point a browser or curl at it.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::thread::sleep;
use std::time::Duration;

use curio::bridge::serve_bridge;
use curio::client::PipelineConfig;
use curio::sim::{LiveOptions, LiveSim, RobotParams, WorldModel};

fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    let status = out.split(' ').nth(1).unwrap_or("?").to_string();
    let body = out.split("\r\n\r\n").nth(1).unwrap_or("").to_string();
    format!("{status} {body}")
}

fn main() {
    let live = LiveSim::spawn(WorldModel::standard(), RobotParams::default(), LiveOptions::default()).unwrap();
    let bridge = serve_bridge(live.handle(), "127.0.0.1:0".parse().unwrap(), PipelineConfig::default()).unwrap();
    let addr = bridge.local_addr();
    println!("bridge at {}", bridge.url());
    if std::env::args().any(|a| a == "--serve") {
        bridge.wait();
        return;
    }
    let call = |m: &str, p: &str, b: &str| println!("{m:<4} {p:<12} {b:<28} -> {}", request(addr, m, p, b));
    call("POST", "/api/uart", "go(100,100)");
    call("POST", "/api/mode", r#"{"mode":"teleop"}"#);
    call("POST", "/api/uart", "go(100,100)");
    call("POST", "/api/mode", r#"{"mode":"track"}"#);
    call("POST", "/api/uart", "go(100,100)");
    sleep(Duration::from_secs(2));
    call("GET", "/api/metrics", "");
    call("PUT", "/api/config", r#"{"confidence":"ultra"}"#);
    call("PUT", "/api/config", r#"{"confidence":"high","response":"fast"}"#);
    sleep(Duration::from_secs(1));
    call("GET", "/api/metrics", "");
    call("POST", "/api/mode", r#"{"mode":"idle"}"#);
    call("GET", "/api/status", "");
}
