//! One tracking session in lockstep with the simulator, printing every
//! decision the loop makes.
//!
//! cargo run --example track_target -- '{"response":"fast"}'

use curio::client::{track_with, ClientConnection, PipelineConfig, RigOptions, SimRig};
use curio::sim::{RobotParams, WorldModel};

fn main() {
    let config = match std::env::args().nth(1) {
        Some(json) => PipelineConfig::from_json(&json).unwrap_or_else(|e| panic!("config: {e}")),
        None => PipelineConfig::default(),
    };
    let rig = SimRig::new(WorldModel::standard(), RobotParams::default(), RigOptions::default()).unwrap();
    let mut conn = ClientConnection::handshake(rig.link()).unwrap();
    let mut config_hook = config;
    let metrics = track_with(&mut conn, &mut rig.camera(), &mut config_hook, 5.0, |step| {
        let err = step.center_error.map_or("  lost".into(), |e| format!("{e:+6.1}"));
        let sent = if step.sent { "" } else { " (not resent)" };
        println!("t={:4.1}s error {err} px  {}{sent}", step.time, step.command);
    })
    .unwrap();
    let pose = rig.pose();
    println!("{config}");
    println!("{metrics:#?}");
    println!("final pose ({:.3}, {:.3}, {:.1}°)", pose.x, pose.y, pose.theta.to_degrees());
}
