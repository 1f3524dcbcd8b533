//! The BLE-UART stand-in: a simulated device behind a TCP link that cuts
//! traffic into 20-byte packets. A client connects, handshakes and drives.

use std::time::Duration;

use curio::client::{connect, LinkError};
use curio::command::MotionCommand;
use curio::sim::{LiveOptions, LiveSim, RobotParams, WorldModel};
use curio::transport::{chunk, serve_link_tcp, DEFAULT_MTU};

fn main() {
    let line = b"go(1000, 1000, 1000)\n";
    let packets = chunk(line, DEFAULT_MTU);
    println!("{} bytes travel as {} packets: {:?}", line.len(), packets.len(),
        packets.iter().map(|p| String::from_utf8_lossy(p.as_bytes()).into_owned()).collect::<Vec<_>>());

    let live = LiveSim::spawn(WorldModel::standard(), RobotParams::default(), LiveOptions::default()).unwrap();
    let server = serve_link_tcp("127.0.0.1:0", live.handle().requests.clone(), DEFAULT_MTU).unwrap();
    let addr = server.local_addr().to_string();
    let mut conn = connect(&addr).expect("handshake");
    println!("connected to {addr}");

    conn.send_move(MotionCommand::new(1000, 1000, Some(1000))).unwrap();
    println!("go(1000, 1000, 1000) -> ok");
    match conn.send_move(MotionCommand::new(0, 0, Some(5000))) {
        Err(LinkError::Device(kind)) => println!("go(0, 0, 5000) -> err {kind}"),
        other => println!("unexpected: {other:?}"),
    }
    std::thread::sleep(Duration::from_millis(500));
    conn.stop().unwrap();
    let status = live.handle().status();
    println!("robot stopped at x={:.4} m after {:.2} s; {:?}", status.pose.x, status.clock, conn.stats);

    drop(server);
    match connect(&addr) {
        Err(e) => println!("after shutdown: {e}"),
        Ok(_) => println!("unexpectedly still reachable"),
    }
}
