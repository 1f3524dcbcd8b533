//! Drives the simulated robot with a scripted command sequence and prints
//! the trajectory next to the closed-form expectation.

use curio::sim::{pose_delta, run, Pose, RobotParams, ScriptedCommands, WorldModel, DEFAULT_DT};

fn main() {
    let params = RobotParams::default();
    let script = ScriptedCommands::new()
        .at(0.0, "go(2048,2048,1024)\n")
        .at(2.5, "go(-1024,1024,1024)\n")
        .at(4.0, "go(2048,2048)\n")
        .at(6.0, "stop()\n");
    let mut source = script;
    let trace = run(&WorldModel::default(), &params, &mut source, DEFAULT_DT, 8.0).expect("valid run");
    for entry in trace.iter().step_by(50) {
        let p = entry.pose;
        println!("t={:5.2}  x={:+.4}  y={:+.4}  theta={:+.4}", entry.clock, p.x, p.y, p.theta);
    }
    for entry in trace.iter().filter(|e| !e.responses.is_empty()) {
        println!("t={:5.2}  device answered {:?}", entry.clock, entry.responses);
    }

    // one wheel revolution straight, then a quarter turn in place
    let mut expected = pose_delta(&params, 2048, 2048, &Pose::default());
    expected = pose_delta(&params, -1024, 1024, &expected);
    let at_four = trace.iter().find(|e| (e.clock - 4.0).abs() < 1e-9).unwrap().pose;
    println!(
        "after two commands: sim ({:+.4}, {:+.4}, {:+.4})  closed form ({:+.4}, {:+.4}, {:+.4})",
        at_four.x, at_four.y, at_four.theta, expected.x, expected.y, expected.theta
    );
}
