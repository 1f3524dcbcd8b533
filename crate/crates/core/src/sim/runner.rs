//! The fixed-timestep simulation loop.

use std::collections::VecDeque;
use std::sync::mpsc::{Receiver, TryRecvError};

use serde::{Deserialize, Serialize};

use super::camera::render_frame;
use super::device::DeviceState;
use super::params::{Pose, RobotParams};
use super::world::WorldModel;
use crate::frame::Frame;
use crate::input::InputError;
use crate::transport::{Line, LineSplitter};

pub const DEFAULT_DT: f64 = 0.01;
pub const MIN_DT: f64 = 1e-4;
pub const MAX_DT: f64 = 0.1;
/// Camera period: 10 frames per simulated second.
pub const DEFAULT_FRAME_INTERVAL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("timestep {0} s outside [{MIN_DT}, {MAX_DT}]")]
    BadTimestep(f64),
    #[error("invalid robot parameters: {0}")]
    BadParams(String),
    #[error("invalid world: {0}")]
    BadWorld(#[from] InputError),
}

pub fn check_dt(dt: f64) -> Result<(), SimError> {
    if (MIN_DT..=MAX_DT).contains(&dt) {
        Ok(())
    } else {
        Err(SimError::BadTimestep(dt))
    }
}

/// Device plus world, advanced in whole ticks.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub world: WorldModel,
    pub params: RobotParams,
    pub state: DeviceState,
    dt: f64,
    ticks: u64,
    splitter: LineSplitter,
}

impl Simulator {
    pub fn new(world: WorldModel, params: RobotParams, dt: f64) -> Result<Self, SimError> {
        check_dt(dt)?;
        params.validate().map_err(SimError::BadParams)?;
        world.validate()?;
        Ok(Self {
            state: DeviceState::at(world.robot_start),
            world,
            params,
            dt,
            ticks: 0,
            splitter: LineSplitter::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn clock(&self) -> f64 {
        self.state.clock
    }

    pub fn pose(&self) -> Pose {
        self.state.pose
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Feeds raw link bytes; returns one response per completed line.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<String> {
        let lines = self.splitter.push(bytes);
        lines.iter().map(|l| self.handle_line(l)).collect()
    }

    pub fn handle_line(&mut self, line: &Line) -> String {
        self.state.exec_line(line, &self.params)
    }

    pub fn step(&mut self) {
        self.state.tick(self.dt, &self.params);
        self.ticks += 1;
        // derive the clock from the tick count so long runs do not drift
        self.state.clock = self.ticks as f64 * self.dt;
    }

    pub fn render(&self) -> Frame {
        render_frame(&self.world, &self.state.pose, self.state.clock)
    }
}

/// Where command bytes come from during [`run`].
pub trait CommandSource {
    /// Bytes that have arrived by `clock`; `None` once the link has closed.
    fn poll(&mut self, clock: f64) -> Option<Vec<u8>>;
}

/// Bytes delivered at fixed simulated times.
#[derive(Debug, Clone, Default)]
pub struct ScriptedCommands {
    items: VecDeque<(f64, Vec<u8>)>,
    close_at: Option<f64>,
}

impl ScriptedCommands {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(mut self, time: f64, bytes: impl Into<Vec<u8>>) -> Self {
        let pos = self.items.partition_point(|(t, _)| *t <= time);
        self.items.insert(pos, (time, bytes.into()));
        self
    }

    /// Closes the link at `time`.
    pub fn close_at(mut self, time: f64) -> Self {
        self.close_at = Some(time);
        self
    }
}

impl CommandSource for ScriptedCommands {
    fn poll(&mut self, clock: f64) -> Option<Vec<u8>> {
        let horizon = clock + 1e-9;
        let mut out = Vec::new();
        while self.items.front().is_some_and(|(t, _)| *t <= horizon) {
            out.extend(self.items.pop_front().unwrap().1);
        }
        if out.is_empty() && self.close_at.is_some_and(|t| t <= horizon) {
            return None;
        }
        Some(out)
    }
}

/// A fixed byte buffer, all of it available at time zero.
impl CommandSource for &[u8] {
    fn poll(&mut self, _clock: f64) -> Option<Vec<u8>> {
        Some(std::mem::take(self).to_vec())
    }
}

impl CommandSource for Receiver<Vec<u8>> {
    fn poll(&mut self, _clock: f64) -> Option<Vec<u8>> {
        let mut out = Vec::new();
        loop {
            match self.try_recv() {
                Ok(bytes) => out.extend(bytes),
                Err(TryRecvError::Empty) => return Some(out),
                Err(TryRecvError::Disconnected) if out.is_empty() => return None,
                Err(TryRecvError::Disconnected) => return Some(out),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub clock: f64,
    pub pose: Pose,
    /// Responses to commands consumed just before this tick.
    pub responses: Vec<String>,
}

/// Headless run: before every tick, pending command bytes are framed and
/// executed in arrival order. Stops at `duration` or when the source closes.
pub fn run(
    world: &WorldModel,
    params: &RobotParams,
    source: &mut dyn CommandSource,
    dt: f64,
    duration: f64,
) -> Result<Vec<TraceEntry>, SimError> {
    let mut sim = Simulator::new(world.clone(), *params, dt)?;
    let ticks = (duration / dt).round().max(0.0) as u64;
    let mut trace = Vec::with_capacity(ticks as usize);
    for _ in 0..ticks {
        let Some(bytes) = source.poll(sim.clock()) else {
            break;
        };
        let responses = sim.feed(&bytes);
        sim.step();
        trace.push(TraceEntry {
            clock: sim.clock(),
            pose: sim.pose(),
            responses,
        });
    }
    Ok(trace)
}
