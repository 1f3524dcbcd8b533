//! Sweeps all 243 pipeline configurations over three worlds and prints how
//! each knob shifts convergence and visibility.
//!
//! cargo run --release --example case_study [out.csv]

use std::time::Instant;

use curio::bench::{median_time, run_grid, write_grid_csv, GridRow, SessionOptions};
use curio::client::PipelineConfig;
use curio::sim::{RobotParams, WorldModel};

fn summarize(label: &str, rows: &[GridRow]) {
    let conv: Vec<_> = rows.iter().map(|r| r.convergence_time).collect();
    let converged = conv.iter().flatten().count();
    let vis = rows.iter().map(|r| r.visibility_fraction).sum::<f64>() / rows.len() as f64;
    println!(
        "{label:<28} n={:<4} converged={converged:<4} median_conv={:<10} mean_vis={vis:.3}",
        rows.len(),
        median_time(&conv).map_or("never".into(), |t| format!("{t:.2}s")),
    );
}

fn main() {
    let configs: Vec<PipelineConfig> = PipelineConfig::all().collect();
    let opts = SessionOptions::default();
    let params = RobotParams::default();
    let mut all = Vec::new();
    // low contrast plus sensor noise pushes the target's fill ratio between
    // the medium and high confidence thresholds
    let mut murky = WorldModel::standard();
    murky.frame_noise.contrast_scale = 0.5;
    murky.frame_noise.sensor_noise = 80;
    let worlds = [
        ("standard", WorldModel::standard()),
        ("rotated180", WorldModel::standard_rotated()),
        ("murky", murky),
    ];
    for (id, world) in worlds {
        let t = Instant::now();
        let rows = run_grid(&world, &params, &configs, &opts, id);
        println!("{id}: {} sessions in {:.1?}", rows.len(), t.elapsed());
        for response in ["slow", "medium", "fast"] {
            let sel: Vec<_> = rows.iter().filter(|r| r.response == response).cloned().collect();
            summarize(&format!("  response={response}"), &sel);
        }
        for rotation in ["none", "cw90", "cw180"] {
            let sel: Vec<_> = rows.iter().filter(|r| r.rotation == rotation).cloned().collect();
            summarize(&format!("  rotation={rotation}"), &sel);
        }
        for confidence in ["low", "medium", "high"] {
            let sel: Vec<_> = rows.iter().filter(|r| r.confidence == confidence).cloned().collect();
            summarize(&format!("  confidence={confidence}"), &sel);
        }
        all.extend(rows);
    }
    if let Some(path) = std::env::args().nth(1) {
        let file = std::fs::File::create(&path).expect("create csv");
        write_grid_csv(&all, file).expect("write csv");
        println!("wrote {} rows to {path}", all.len());
    }
}
