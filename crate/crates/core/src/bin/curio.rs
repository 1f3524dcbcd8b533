// `!(x > 0.0)` is deliberate: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use curio::bench::{self, SessionOptions, SessionReport};
use curio::bridge::serve_bridge;
use curio::client::{self, HttpCamera, PipelineConfig, RigOptions, TrackError};
use curio::sim::{check_dt, LiveOptions, LiveSim, RobotParams, WorldModel, DEFAULT_DT};
use curio::transport::{serve_link_tcp, DEFAULT_MTU};

#[derive(Parser)]
#[command(name = "curio", version, about = "Simulated Curio robot: device, tracking client and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulated robot: command link on --tcp-port, camera stream and
    /// bridge API on --http-port.
    Sim {
        /// World JSON; the standard world if omitted.
        world: Option<PathBuf>,
        #[arg(long, default_value_t = 7070)]
        tcp_port: u16,
        #[arg(long, default_value_t = 8080)]
        http_port: u16,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Simulated seconds per wall second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// Exit after this many wall seconds.
        #[arg(long)]
        run_for: Option<f64>,
    },
    /// Run one tracking session. Without --device/--camera the session runs
    /// in lockstep against an in-process simulator.
    Track {
        #[arg(long)]
        world: Option<PathBuf>,
        /// Device link address, e.g. 127.0.0.1:7070.
        #[arg(long, requires = "camera")]
        device: Option<String>,
        /// Camera stream URL, e.g. http://127.0.0.1:8080/stream.
        #[arg(long, requires = "device")]
        camera: Option<String>,
        /// Pipeline config JSON; defaults for any missing field.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = bench::DEFAULT_SESSION_S)]
        duration: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "CURIO_SEED")]
        seed: Option<u64>,
    },
    /// Run all 243 pipeline configurations and write one CSV row each.
    Bench {
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long, default_value_t = bench::DEFAULT_SESSION_S)]
        duration: f64,
        #[arg(long, default_value = "grid.csv")]
        out: PathBuf,
        #[arg(long, env = "CURIO_SEED")]
        seed: Option<u64>,
    },
}

enum Failure {
    BadInput(String),
    Connectivity(String),
    Session(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::BadInput(m) => (2, m),
            Failure::Connectivity(m) => (3, m),
            Failure::Session(m) => (4, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))
}

fn load_world(path: Option<&Path>) -> Result<(WorldModel, String), Failure> {
    let Some(path) = path else {
        return Ok((WorldModel::standard(), "standard".into()));
    };
    let world = WorldModel::from_json(&read_file(path)?)
        .map_err(|e| Failure::BadInput(format!("world file {}: {e}", path.display())))?;
    let id = path.file_stem().map_or("world".into(), |s| s.to_string_lossy().into_owned());
    Ok((world, id))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    PipelineConfig::from_json(&read_file(path)?)
        .map_err(|e| Failure::BadInput(format!("config file {}: {e}", path.display())))
}

fn check_duration(duration: f64) -> Result<(), Failure> {
    if duration.is_finite() && duration >= 0.0 {
        Ok(())
    } else {
        Err(Failure::BadInput(format!("--duration must be >= 0, got {duration}")))
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Session(format!("writing {}: {e}", path.display())))
}

fn cmd_sim(
    world: Option<&Path>,
    tcp_port: u16,
    http_port: u16,
    dt: f64,
    time_scale: f64,
    run_for: Option<f64>,
) -> Result<(), Failure> {
    check_dt(dt).map_err(|e| Failure::BadInput(format!("--dt: {e}")))?;
    if !(time_scale > 0.0) {
        return Err(Failure::BadInput("--time-scale must be > 0".into()));
    }
    let (world, _) = load_world(world)?;
    let opts = LiveOptions {
        dt,
        time_scale,
        ..Default::default()
    };
    let live = LiveSim::spawn(world, RobotParams::default(), opts)
        .map_err(|e| Failure::BadInput(e.to_string()))?;
    let handle = live.handle();
    let link = serve_link_tcp((Ipv4Addr::LOCALHOST, tcp_port), handle.requests.clone(), DEFAULT_MTU)
        .map_err(|e| Failure::Connectivity(format!("device link port {tcp_port}: {e}")))?;
    let http = SocketAddr::from((Ipv4Addr::LOCALHOST, http_port));
    let bridge = serve_bridge(handle, http, PipelineConfig::default())
        .map_err(|e| Failure::Connectivity(format!("http port {http_port}: {e}")))?;
    println!("device link  tcp://{}", link.local_addr());
    println!("camera       {}/stream", bridge.url());
    println!("bridge API   {}/api", bridge.url());
    match run_for {
        Some(secs) => std::thread::sleep(Duration::from_secs_f64(secs.max(0.0))),
        None => bridge.wait(),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_track(
    world: Option<&Path>,
    device: Option<&str>,
    camera: Option<&str>,
    config: Option<&Path>,
    duration: f64,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    check_duration(duration)?;
    let config = load_config(config)?;
    let report = match (device, camera) {
        (Some(device), Some(camera)) => {
            let mut conn = client::connect(device).map_err(|e| Failure::Connectivity(e.to_string()))?;
            let mut cam = HttpCamera::open(camera, Duration::from_secs(2))
                .map_err(|e| Failure::Connectivity(format!("camera {camera}: {e}")))?;
            let metrics = client::track(&mut conn, &mut cam, &config, duration).map_err(session_failure)?;
            let _ = conn.stop();
            SessionReport {
                config,
                metrics,
                world_id: format!("live:{device}"),
                seed: seed.unwrap_or(bench::DEFAULT_SEED),
            }
        }
        _ => {
            let (world, world_id) = load_world(world)?;
            let opts = SessionOptions {
                duration,
                seed: seed.unwrap_or(world.seed),
                rig: RigOptions::default(),
            };
            bench::run_session(&world, &RobotParams::default(), &config, &opts, &world_id).map_err(|e| match e {
                bench::SessionError::Track(t) => session_failure(t),
                other => Failure::Session(other.to_string()),
            })?
        }
    };
    let m = &report.metrics;
    println!("config              {}", report.config);
    println!("frames_processed    {}", m.frames_processed);
    println!("commands_sent       {}", m.commands_sent);
    println!("visibility_fraction {:.3}", m.visibility_fraction);
    println!("mean_abs_center_err {:.2} px", m.mean_abs_center_err);
    match m.convergence_time {
        Some(t) => println!("convergence_time    {t:.2} s"),
        None => println!("convergence_time    none"),
    }
    if let Some(out) = out {
        let json = serde_json::to_vec_pretty(&report).expect("report serializes");
        write_out(out, &json)?;
    }
    Ok(())
}

fn session_failure(e: TrackError) -> Failure {
    match e {
        TrackError::LinkLost { .. } => Failure::Connectivity(e.to_string()),
        TrackError::Camera { .. } => Failure::Session(e.to_string()),
    }
}

fn cmd_bench(world: Option<&Path>, duration: f64, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    check_duration(duration)?;
    let (world, world_id) = load_world(world)?;
    let opts = SessionOptions {
        duration,
        seed: seed.unwrap_or(world.seed),
        rig: RigOptions::default(),
    };
    let configs: Vec<_> = PipelineConfig::all().collect();
    let rows = bench::run_grid(&world, &RobotParams::default(), &configs, &opts, &world_id);
    let mut csv = Vec::new();
    bench::write_grid_csv(&rows, &mut csv).map_err(|e| Failure::Session(e.to_string()))?;
    write_out(out, &csv)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let conv: Vec<_> = rows.iter().map(|r| r.convergence_time).collect();
    println!(
        "{} sessions, {} converged, {failed} failed, median convergence {}; wrote {}",
        rows.len(),
        conv.iter().flatten().count(),
        bench::median_time(&conv).map_or("none".into(), |t| format!("{t:.2} s")),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sim {
            world,
            tcp_port,
            http_port,
            dt,
            time_scale,
            run_for,
        } => cmd_sim(world.as_deref(), tcp_port, http_port, dt, time_scale, run_for),
        Command::Track {
            world,
            device,
            camera,
            config,
            duration,
            out,
            seed,
        } => cmd_track(
            world.as_deref(),
            device.as_deref(),
            camera.as_deref(),
            config.as_deref(),
            duration,
            out.as_deref(),
            seed,
        ),
        Command::Bench {
            world,
            duration,
            out,
            seed,
        } => cmd_bench(world.as_deref(), duration, &out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
