//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check compares the library against an oracle written here.

// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curio::bench::{median_key, run_grid, run_session, write_grid_csv, GridRow, SessionOptions};
use curio::client::{
    deadband_px, track, ClientConnection, LinkError, PipelineConfig, RigOptions, Rotation, SimRig,
    TrackError,
};
use curio::command::{self, CommandAst, MotionCommand, MAX_STEPS};
use curio::frame::Frame;
use curio::sim::{
    pose_delta, project, render_frame, shared_rate_delta, DeviceState, Pose, RobotParams, Target,
    WorldModel,
};
use curio::transport::{
    chunk, encode_part, open_stream, parse_multipart, reassemble, serve_frames_multipart,
    split_lines, FrameSlot, LineSplitter,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within_time(started: Instant, limit_s: f64, detail: String) -> Outcome {
    let took = started.elapsed().as_secs_f64();
    ensure!(took < limit_s, "{detail}; took {took:.2} s, limit {limit_s} s");
    Ok(format!("{detail}; {took:.2} s"))
}

// 1. command round trip ------------------------------------------------------

fn any_ast() -> impl Strategy<Value = CommandAst> {
    let steps = -MAX_STEPS..=MAX_STEPS;
    prop_oneof![
        1 => Just(CommandAst::Stop),
        9 => (steps.clone(), steps, proptest::option::of(1u32..=u32::MAX))
            .prop_map(|(l, r, s)| CommandAst::Go(MotionCommand::new(l, r, s))),
    ]
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let literal = command::parse("go(1000, 1000, 1000)").map_err(|e| e.to_string())?;
    let expected = CommandAst::Go(MotionCommand::new(1000, 1000, Some(1000)));
    ensure!(literal == expected, "literal parsed as {literal:?}");
    ensure!(
        command::parse(&command::format(&literal)) == Ok(literal),
        "literal does not round-trip"
    );
    let cases = 10_000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let ran = std::cell::Cell::new(0u32);
    runner
        .run(&any_ast(), |ast| {
            ran.set(ran.get() + 1);
            prop_assert_eq!(command::parse(&command::format(&ast)), Ok(ast));
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;
    ensure!(ran.get() >= cases, "only {} cases ran", ran.get());
    within_time(started, 5.0, format!("{} generated commands plus the literal", ran.get()))
}

// 2. kinematics oracle -------------------------------------------------------

/// Midpoint-heading Euler integration of piecewise-constant wheel speeds
/// (m/s), each segment `(duration, v_left, v_right)`.
fn euler(params: &RobotParams, segments: &[(f64, f64, f64)], dt: f64) -> (Pose, f64) {
    let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
    let mut path = 0.0;
    for &(duration, vl, vr) in segments {
        let v = 0.5 * (vl + vr);
        let w = (vr - vl) / params.wheel_base;
        let mut t = 0.0;
        while t < duration {
            let h = dt.min(duration - t);
            let mid = th + 0.5 * w * h;
            x += v * mid.cos() * h;
            y += v * mid.sin() * h;
            th += w * h;
            path += v.abs() * h;
            t += h;
        }
    }
    (Pose { x, y, theta: th }, path)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn compare(label: &str, got: &Pose, oracle: &Pose, path: f64, worst: &mut (f64, f64)) -> Result<(), String> {
    let pos = (got.x - oracle.x).hypot(got.y - oracle.y);
    let rel = if path > 0.0 { pos / path } else { pos };
    let head = angle_diff(got.theta, oracle.theta);
    worst.0 = worst.0.max(rel);
    worst.1 = worst.1.max(head);
    ensure!(rel <= 1e-4, "{label}: relative position error {rel:.3e} > 1e-4");
    ensure!(head <= 1e-6, "{label}: heading error {head:.3e} rad > 1e-6");
    Ok(())
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let params = RobotParams::default();
    let step = params.step_distance(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_arc = (0.0, 0.0);
    let mut worst_shared = (0.0, 0.0);
    let mut worst_device = (0.0, 0.0);
    let n = 1_000;
    for i in 0..n {
        let l: i64 = rng.random_range(-6000..=6000);
        let r: i64 = rng.random_range(-6000..=6000);
        let speed = if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(200..=params.max_speed))
        };
        let s = speed.unwrap_or(params.default_speed) as f64;
        let label = format!("case {i}: go({l},{r},{speed:?})");
        let (long, short) = (l.abs().max(r.abs()) as f64, l.abs().min(r.abs()) as f64);

        // constant wheel ratio: one arc
        let t = long / s;
        let arc = if t > 0.0 {
            vec![(t, l as f64 * step / t, r as f64 * step / t)]
        } else {
            vec![]
        };
        let (oracle, path) = euler(&params, &arc, 1e-4);
        compare(&label, &pose_delta(&params, l, r, &Pose::default()), &oracle, path, &mut worst_arc)?;

        // shared step rate: both wheels at `s`, then the longer one alone
        let v = s * step;
        let (sl, sr) = (l.signum() as f64, r.signum() as f64);
        let phase2 = if l.abs() > r.abs() { (sl * v, 0.0) } else { (0.0, sr * v) };
        let segments = [(short / s, sl * v, sr * v), ((long - short) / s, phase2.0, phase2.1)];
        let (oracle, path) = euler(&params, &segments, 1e-4);
        let closed = shared_rate_delta(&params, l, r, &Pose::default());
        compare(&label, &closed, &oracle, path, &mut worst_shared)?;

        // the device's own tick loop against the closed form, every tenth case
        if i % 10 == 0 {
            let mut dev = DeviceState::default();
            let ok = dev.exec(&CommandAst::Go(MotionCommand::new(l as i32, r as i32, speed)), &params);
            ensure!(ok == "ok\n", "{label}: device answered {ok:?}");
            while !dev.is_idle() {
                dev.tick(1e-4, &params);
            }
            compare(&format!("{label} (device)"), &dev.pose, &closed, path, &mut worst_device)?;
        }
    }
    within_time(
        started,
        10.0,
        format!(
            "{n} commands; worst rel/heading err: arc {:.1e}/{:.1e}, shared-rate {:.1e}/{:.1e}, device {:.1e}/{:.1e}",
            worst_arc.0, worst_arc.1, worst_shared.0, worst_shared.1, worst_device.0, worst_device.1
        ),
    )
}

// 3. transport -------------------------------------------------------------

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(
            &(proptest::collection::vec(any::<u8>(), 0..512), 1usize..=64),
            |(payload, mtu)| {
                let chunks = chunk(&payload, mtu);
                prop_assert!(chunks.iter().all(|c| !c.is_empty() && c.len() <= mtu));
                prop_assert_eq!(chunks.len(), payload.len().div_ceil(mtu));
                prop_assert_eq!(reassemble(&chunks), payload);
                Ok(())
            },
        )
        .map_err(|e| format!("chunking: {e}"))?;

    let line = proptest::string::string_regex("[ -~]{0,40}").unwrap();
    let framing = (
        proptest::collection::vec(line, 0..12),
        proptest::collection::vec(1usize..=64, 1..64),
    );
    let mut runner = TestRunner::new(Config {
        cases: 2_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&framing, |(lines, cuts)| {
            let stream: Vec<u8> = lines.iter().flat_map(|l| format!("{l}\n").into_bytes()).collect();
            let expected: Vec<_> = lines.iter().map(|l| Ok(l.clone())).collect();
            prop_assert_eq!(split_lines(&stream), expected.clone());
            let mut splitter = LineSplitter::new();
            let mut got = Vec::new();
            let mut rest = &stream[..];
            let mut k = 0;
            while !rest.is_empty() {
                let n = cuts[k % cuts.len()].min(rest.len());
                got.extend(splitter.push(&rest[..n]));
                rest = &rest[n..];
                k += 1;
            }
            prop_assert_eq!(got, expected);
            prop_assert_eq!(splitter.pending(), 0);
            Ok(())
        })
        .map_err(|e| format!("line framing: {e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let frames: Vec<Frame> = (0..100)
        .map(|i| {
            let (w, h) = (rng.random_range(1..64), rng.random_range(1..48));
            let pixels = (0..w * h).map(|_| rng.random()).collect();
            Frame::new(w, h, pixels, i as f64 * 0.1)
        })
        .collect();
    ensure!(frames.iter().all(|f| encode_part(f).is_some()), "a test frame contains the delimiter");

    // in memory
    let mut body = curio::transport::multipart::response_head();
    for f in &frames {
        body.extend(encode_part(f).unwrap());
    }
    let decoded: Vec<Frame> = parse_multipart(&body[..])
        .map_err(|e| e.to_string())?
        .map(|ev| match ev {
            Ok(curio::transport::PartEvent::Frame(f)) => Ok(f),
            other => Err(format!("{other:?}")),
        })
        .collect::<Result<_, _>>()?;
    ensure!(decoded == frames, "in-memory multipart round trip differs");

    // over a loopback HTTP connection
    let slot = FrameSlot::new();
    let server = serve_frames_multipart(slot.clone(), "127.0.0.1:0").map_err(|e| e.to_string())?;
    let mut reader = open_stream(&server.url(), Duration::from_secs(5)).map_err(|e| e.to_string())?;
    for (i, f) in frames.iter().enumerate() {
        slot.publish(f.clone());
        let got = reader
            .next_frame()
            .ok_or("stream ended")?
            .map_err(|e| format!("frame {i}: {e}"))?;
        ensure!(&got == f, "loopback frame {i} differs");
    }
    within_time(
        started,
        10.0,
        "10000 payload/MTU pairs, 2000 re-chunked line streams, 100 frames in memory and over loopback".into(),
    )
}

// 4. projection ------------------------------------------------------------

/// Lit bounding box `(x0, y0, x1, y1)` of a rendered frame, inclusive.
fn lit_box(f: &Frame) -> Option<(u32, u32, u32, u32)> {
    let mut b: Option<(u32, u32, u32, u32)> = None;
    for y in 0..f.height {
        for x in 0..f.width {
            if f.get(x, y) >= 128 {
                b = Some(b.map_or((x, y, x, y), |(a, c, d, e)| (a.min(x), c.min(y), d.max(x), e.max(y))));
            }
        }
    }
    b
}

fn criterion_4() -> Outcome {
    let mut checks = 0;
    for (fov, w, h) in [(60.0, 320u32, 240u32), (90.0, 640, 480), (45.0, 160, 120)] {
        for dist in [0.8, 1.5, 3.0] {
            for bearing_deg in [0.0, fov / 2.0, -fov / 2.0] {
                let b = f64::to_radians(bearing_deg);
                let mut world = WorldModel::default();
                world.camera.fov_deg = fov;
                world.camera.width = w;
                world.camera.height = h;
                world.targets = vec![Target::fixed("t", dist * b.cos(), dist * b.sin(), 0.1)];
                let frame = render_frame(&world, &Pose::default(), 0.0);
                let (x0, y0, x1, y1) = lit_box(&frame).ok_or("target not rendered")?;
                // vertical extent is never clipped, so it gives the radius
                let r = (y1 - y0 + 1) as f64 / 2.0;
                let (centre, want) = if bearing_deg == 0.0 {
                    ((x0 + x1 + 1) as f64 / 2.0, w as f64 / 2.0)
                } else if bearing_deg > 0.0 {
                    ((x1 + 1) as f64 - r, 0.0)
                } else {
                    (x0 as f64 + r, w as f64)
                };
                let label = format!("fov {fov} {w}x{h} dist {dist} bearing {bearing_deg}");
                ensure!((centre - want).abs() <= 1.0, "{label}: rendered centre {centre:.2}, want {want} ± 1");
                let p = project(&world.camera, &Pose::default(), world.targets[0].x, world.targets[0].y, 0.1)
                    .ok_or("projection failed")?;
                ensure!((p.column - want).abs() <= 1.0, "{label}: projected column {:.3}", p.column);
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} rendered placements at bearings 0 and ±FOV/2 within 1 px"))
}

// 5. closed loop -----------------------------------------------------------

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let world = WorldModel::standard();
    let params = RobotParams::default();
    let config = PipelineConfig::default();
    let opts = SessionOptions::default();
    ensure!(opts.rig.dt == 0.01 && opts.duration == 20.0, "unexpected session defaults");
    let first = run_session(&world, &params, &config, &opts, "standard").map_err(|e| e.to_string())?;
    let m = &first.metrics;
    let conv = m.convergence_time.ok_or_else(|| format!("never converged: {m:?}"))?;
    ensure!(conv <= 20.0, "converged at {conv}");
    let post = m.post_convergence_visibility.unwrap_or(0.0);
    ensure!(post >= 0.90, "post-convergence visibility {post}");

    // geometric cross-check: from the convergence window on, the true bearing
    // of the target sits inside the deadband's angular width
    let rig = SimRig::new(world.clone(), params, opts.rig).map_err(|e| e.to_string())?;
    let mut conn = ClientConnection::handshake(rig.link()).map_err(|e| e.to_string())?;
    let again = track(&mut conn, &mut rig.camera(), &config, opts.duration).map_err(|e| e.to_string())?;
    let cam = &world.camera;
    let half_band = (deadband_px(cam.width) / cam.focal_px()).atan() + 1.0 / cam.focal_px();
    let t = &world.targets[0];
    for (clock, pose) in rig.trail().iter().filter(|(c, _)| *c >= conv - 1e-9 && *c <= conv + 1.0) {
        let bearing = angle_diff((t.y - pose.y).atan2(t.x - pose.x), pose.theta);
        ensure!(bearing <= half_band, "t={clock}: true bearing {bearing:.4} rad outside deadband");
    }

    let a = serde_json::to_string(&first.metrics).unwrap();
    let b = serde_json::to_string(&again).unwrap();
    let rerun = run_session(&world, &params, &config, &opts, "standard").map_err(|e| e.to_string())?;
    let c = serde_json::to_string(&rerun.metrics).unwrap();
    ensure!(a == b && a == c, "reruns differ:\n{a}\n{b}\n{c}");

    let mut noisy = world.clone();
    noisy.frame_noise.sensor_noise = 30;
    let seeded = SessionOptions { seed: 42, ..opts };
    let n1 = run_session(&noisy, &params, &config, &seeded, "noisy").map_err(|e| e.to_string())?;
    let n2 = run_session(&noisy, &params, &config, &seeded, "noisy").map_err(|e| e.to_string())?;
    ensure!(
        serde_json::to_string(&n1).unwrap() == serde_json::to_string(&n2).unwrap(),
        "seeded noisy reruns differ"
    );
    within_time(
        started,
        30.0,
        format!("converged at {conv:.2} s, post-convergence visibility {post:.3}, reruns byte-identical"),
    )
}

// 6. case-study grid -------------------------------------------------------

fn medians(rows: &[GridRow], response: &str, filter: impl Fn(&GridRow) -> bool) -> f64 {
    let v: Vec<_> = rows
        .iter()
        .filter(|r| r.response == response && filter(r))
        .map(|r| r.convergence_time)
        .collect();
    median_key(&v)
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let params = RobotParams::default();
    let opts = SessionOptions::default();
    let configs: Vec<_> = PipelineConfig::all().collect();
    let rows = run_grid(&WorldModel::standard(), &params, &configs, &opts, "standard");
    ensure!(rows.len() == 243, "{} rows", rows.len());
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        return Err(format!("session failed: {:?}", bad.error));
    }
    let mut csv = Vec::new();
    write_grid_csv(&rows, &mut csv).map_err(|e| e.to_string())?;
    let records = csv::Reader::from_reader(&csv[..]).records().count();
    ensure!(records == 243, "CSV has {records} data rows");
    let rerun = run_grid(&WorldModel::standard(), &params, &configs, &opts, "standard");
    let mut csv2 = Vec::new();
    write_grid_csv(&rerun, &mut csv2).map_err(|e| e.to_string())?;
    ensure!(csv == csv2, "grid CSV differs between reruns");

    let (fast, slow) = (medians(&rows, "fast", |_| true), medians(&rows, "slow", |_| true));
    ensure!(fast <= slow, "median convergence fast {fast} > slow {slow}");
    let upright = |r: &GridRow| r.rotation == "none";
    let (fast0, slow0) = (medians(&rows, "fast", upright), medians(&rows, "slow", upright));
    ensure!(fast0.is_finite() && fast0 <= slow0, "rotation=none rows: fast {fast0} vs slow {slow0}");

    let rotated = WorldModel::standard_rotated();
    let session = |rotation| {
        let config = PipelineConfig {
            rotation,
            ..PipelineConfig::default()
        };
        run_session(&rotated, &params, &config, &opts, "rotated").map(|r| r.metrics)
    };
    let matched = session(Rotation::Cw180).map_err(|e| e.to_string())?;
    let mismatched = session(Rotation::None).map_err(|e| e.to_string())?;
    ensure!(matched.convergence_time.is_some(), "matched rotation did not converge: {matched:?}");
    ensure!(mismatched.convergence_time.is_none(), "rotation=none converged: {mismatched:?}");
    let gap = matched.visibility_fraction - mismatched.visibility_fraction;
    ensure!(gap >= 0.5, "visibility gap {gap:.3}");
    within_time(
        started,
        600.0,
        format!(
            "243 rows x2 identical; median conv fast {fast:.2} s <= slow {slow:.2} s; rotated world visibility {:.3} vs {:.3}",
            matched.visibility_fraction, mismatched.visibility_fraction
        ),
    )
}

// 7. faults ----------------------------------------------------------------

fn run_cli(args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_curio"))
        .args(args)
        .env_remove("CURIO_SEED")
        .output()
        .expect("run curio");
    (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn criterion_7() -> Outcome {
    let rig = SimRig::new(WorldModel::standard(), RobotParams::default(), RigOptions::default())
        .map_err(|e| e.to_string())?;
    let mut conn = ClientConnection::handshake(rig.link()).map_err(|e| e.to_string())?;
    rig.disconnect_after(12);
    match track(&mut conn, &mut rig.camera(), &PipelineConfig::default(), 20.0) {
        Err(TrackError::LinkLost {
            source: LinkError::Closed,
            metrics,
        }) => ensure!(metrics.frames_processed > 0, "aborted before any frame"),
        other => return Err(format!("mid-track disconnect gave {other:?}")),
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let world = dir.path().join("world.json");
    std::fs::write(&world, r#"{"targets": [{"x": 1.0, "y": 0.0, "radius": -0.1}]}"#).unwrap();
    let (code, err) = run_cli(&["track", "--world", world.to_str().unwrap(), "--duration", "1"]);
    ensure!(code == Some(2), "malformed world: exit {code:?}, stderr {err}");
    ensure!(err.contains("field `targets[0].radius`"), "malformed world diagnostic: {err}");

    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\n  \"confidence\": \"extreme\"\n}").unwrap();
    let (code, err) = run_cli(&["track", "--config", config.to_str().unwrap(), "--duration", "1"]);
    ensure!(code == Some(2), "malformed config: exit {code:?}, stderr {err}");
    ensure!(err.contains("field `confidence` (line 2"), "malformed config diagnostic: {err}");
    Ok("disconnect aborts with link-closed; bad world and config name the field and exit 2".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("command round-trip", criterion_1),
        ("kinematics oracle", criterion_2),
        ("transport properties", criterion_3),
        ("projection", criterion_4),
        ("closed-loop convergence", criterion_5),
        ("case-study grid", criterion_6),
        ("fault handling", criterion_7),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL - {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
