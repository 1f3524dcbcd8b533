//! Sessions against the lockstep simulator and the configuration-grid
//! case study.

use std::io::Write;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::client::{
    track, ClientConnection, LinkError, PipelineConfig, RigOptions, SimRig, TrackError,
    TrackingMetrics,
};
use crate::sim::{RobotParams, SimError, WorldModel};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "CURIO_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SESSION_S: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionOptions {
    pub duration: f64,
    pub seed: u64,
    pub rig: RigOptions,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            duration: DEFAULT_SESSION_S,
            seed: DEFAULT_SEED,
            rig: RigOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: PipelineConfig,
    pub metrics: TrackingMetrics,
    pub world_id: String,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("handshake failed: {0}")]
    Handshake(LinkError),
    #[error(transparent)]
    Track(#[from] TrackError),
}

/// `CURIO_SEED` if set and parseable, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

/// One tracking session in lockstep with a fresh simulator.
pub fn run_session(
    world: &WorldModel,
    params: &RobotParams,
    config: &PipelineConfig,
    opts: &SessionOptions,
    world_id: &str,
) -> Result<SessionReport, SessionError> {
    let mut world = world.clone();
    world.seed = opts.seed;
    let rig = SimRig::new(world, *params, opts.rig)?;
    let mut conn = ClientConnection::handshake(rig.link()).map_err(SessionError::Handshake)?;
    let metrics = track(&mut conn, &mut rig.camera(), config, opts.duration)?;
    Ok(SessionReport {
        config: *config,
        metrics,
        world_id: world_id.to_string(),
        seed: opts.seed,
    })
}

/// One CSV row of the grid: config columns, metric columns, then provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rotation: String,
    pub enhance: String,
    pub confidence: String,
    pub margins: String,
    pub response: String,
    pub visibility_fraction: f64,
    pub mean_abs_center_err: f64,
    pub convergence_time: Option<f64>,
    pub commands_sent: u64,
    pub frames_processed: u64,
    pub post_convergence_visibility: Option<f64>,
    pub seed: u64,
    pub world_id: String,
    pub error: Option<String>,
}

impl GridRow {
    fn new(config: &PipelineConfig, outcome: &Result<SessionReport, SessionError>, world_id: &str, seed: u64) -> Self {
        let (metrics, error) = match outcome {
            Ok(r) => (r.metrics.clone(), None),
            Err(SessionError::Track(e)) => (e.metrics().clone(), Some(e.to_string())),
            Err(e) => (TrackingMetrics::default(), Some(e.to_string())),
        };
        Self {
            rotation: config.rotation.name().into(),
            enhance: config.enhance.name().into(),
            confidence: config.confidence.name().into(),
            margins: config.margins.name().into(),
            response: config.response.name().into(),
            visibility_fraction: metrics.visibility_fraction,
            mean_abs_center_err: metrics.mean_abs_center_err,
            convergence_time: metrics.convergence_time,
            commands_sent: metrics.commands_sent,
            frames_processed: metrics.frames_processed,
            post_convergence_visibility: metrics.post_convergence_visibility,
            seed,
            world_id: world_id.to_string(),
            error,
        }
    }

    pub fn config(&self) -> Option<PipelineConfig> {
        PipelineConfig::from_json(&format!(
            r#"{{"rotation":"{}","enhance":"{}","confidence":"{}","margins":"{}","response":"{}"}}"#,
            self.rotation, self.enhance, self.confidence, self.margins, self.response
        ))
        .ok()
    }
}

/// Runs every configuration in `configs`, in order, spreading the sessions
/// across threads. Failed sessions still produce a row.
pub fn run_grid(
    world: &WorldModel,
    params: &RobotParams,
    configs: &[PipelineConfig],
    opts: &SessionOptions,
    world_id: &str,
) -> Vec<GridRow> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len().max(1));
    let per = configs.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = configs
            .chunks(per)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|c| GridRow::new(c, &run_session(world, params, c, opts, world_id), world_id, opts.seed))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<GridRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Median with `None` ordered after every value (a session that never
/// converged counts as infinitely slow). `None` only if `values` is empty
/// or the median itself falls on a `None`.
pub fn median_time(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    m.is_finite().then_some(m)
}

/// Median comparison key: `None` as +∞.
pub fn median_key(values: &[Option<f64>]) -> f64 {
    median_time(values).unwrap_or(f64::INFINITY)
}
