//! The IP-camera path: the simulator's frames served as a multipart HTTP
//! stream and read back by a client.

use std::time::Duration;

use curio::sim::{LiveOptions, LiveSim, RobotParams, WorldModel};
use curio::transport::{encode_part, open_stream, serve_frames_multipart};

fn main() {
    let live = LiveSim::spawn(WorldModel::standard(), RobotParams::default(), LiveOptions::default()).unwrap();
    let server = serve_frames_multipart(live.handle().frames.clone(), "127.0.0.1:0").unwrap();
    println!("streaming at {}", server.url());

    let mut reader = open_stream(&server.url(), Duration::from_secs(2)).unwrap();
    for _ in 0..10 {
        let frame = reader.next_frame().unwrap().unwrap();
        let part = encode_part(&frame).unwrap();
        let lit = frame.pixels.iter().filter(|&&p| p >= 128).count();
        println!(
            "t={:.2}s {}x{} {} lit pixels, {} bytes on the wire",
            frame.timestamp,
            frame.width,
            frame.height,
            lit,
            part.len()
        );
    }
}
