//! A tracking session over real sockets: simulator in real time, commands
//! over the TCP link, frames over HTTP.

use std::time::Duration;

use curio::client::{connect, track, HttpCamera, PipelineConfig};
use curio::sim::{LiveOptions, LiveSim, RobotParams, WorldModel};
use curio::transport::{serve_frames_multipart, serve_link_tcp, DEFAULT_MTU};

fn main() {
    let opts = LiveOptions {
        time_scale: 2.0,
        ..Default::default()
    };
    let live = LiveSim::spawn(WorldModel::standard(), RobotParams::default(), opts).unwrap();
    let h = live.handle();
    let link = serve_link_tcp("127.0.0.1:0", h.requests.clone(), DEFAULT_MTU).unwrap();
    let stream = serve_frames_multipart(h.frames.clone(), "127.0.0.1:0").unwrap();

    let mut conn = connect(&link.local_addr().to_string()).unwrap();
    let mut camera = HttpCamera::open(&stream.url(), Duration::from_secs(2)).unwrap();
    let metrics = track(&mut conn, &mut camera, &PipelineConfig::default(), 6.0).unwrap();
    conn.stop().unwrap();
    println!("{}", serde_json::to_string_pretty(&metrics).unwrap());
}
