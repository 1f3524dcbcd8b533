//! Renders what the phone camera sees in the standard world and writes it
//! as a PGM image.
//!
//! cargo run --example camera -- view.pgm

use curio::client::{detect, PipelineConfig};
use curio::sim::{project, render_frame, Pose, WorldModel};

fn main() {
    let world = WorldModel::standard();
    let target = &world.targets[0];
    for heading_deg in [0.0f64, 15.0, 30.0] {
        let pose = Pose::new(0.0, 0.0, heading_deg.to_radians());
        let frame = render_frame(&world, &pose, 0.0);
        let p = project(&world.camera, &pose, target.x, target.y, target.radius);
        let det = detect(&frame, &PipelineConfig::default());
        println!(
            "heading {heading_deg:>4}°: projected column {:>7.2}, detected centre {:?}",
            p.map_or(f64::NAN, |p| p.column),
            det.map(|d| d.center)
        );
    }
    let rotated = render_frame(&WorldModel::standard_rotated(), &Pose::default(), 0.0);
    println!("upside-down mount: detected centre {:?}", detect(&rotated, &PipelineConfig::default()).map(|d| d.center));
    if let Some(path) = std::env::args().nth(1) {
        let frame = render_frame(&world, &Pose::new(0.0, 0.0, 20f64.to_radians()), 0.0);
        std::fs::write(&path, frame.to_pgm()).expect("write pgm");
        println!("wrote {path}");
    }
}
