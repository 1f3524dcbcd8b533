//! Real-time simulator thread: commands in through a queue, frames out
//! through a latest-value slot.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::params::{Pose, RobotParams};
use super::runner::{SimError, Simulator, DEFAULT_DT, DEFAULT_FRAME_INTERVAL};
use super::world::WorldModel;
use crate::transport::{DeviceRequest, FrameSlot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveOptions {
    pub dt: f64,
    pub frame_interval: f64,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            frame_interval: DEFAULT_FRAME_INTERVAL,
            time_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimStatus {
    pub clock: f64,
    pub pose: Pose,
    pub last_response: String,
    pub commands: u64,
}

/// Cloneable handles onto a running simulator.
#[derive(Debug, Clone)]
pub struct SimHandle {
    pub requests: Sender<DeviceRequest>,
    pub frames: FrameSlot,
    pub status: Arc<Mutex<SimStatus>>,
}

impl SimHandle {
    pub fn status(&self) -> SimStatus {
        self.status.lock().unwrap().clone()
    }
}

pub struct LiveSim {
    handle: SimHandle,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl LiveSim {
    pub fn spawn(world: WorldModel, params: RobotParams, opts: LiveOptions) -> Result<Self, SimError> {
        let sim = Simulator::new(world, params, opts.dt)?;
        let (tx, rx) = mpsc::channel();
        let handle = SimHandle {
            requests: tx,
            frames: FrameSlot::new(),
            status: Arc::new(Mutex::new(SimStatus::default())),
        };
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let handle = handle.clone();
            let stop = stop.clone();
            thread::Builder::new()
                .name("curio-sim".into())
                .spawn(move || sim_loop(sim, rx, handle, stop, opts))
                .expect("spawn simulator thread")
        };
        Ok(Self {
            handle,
            stop,
            thread: Some(thread),
        })
    }

    pub fn handle(&self) -> SimHandle {
        self.handle.clone()
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for LiveSim {
    fn drop(&mut self) {
        self.stop_now();
    }
}

fn sim_loop(
    mut sim: Simulator,
    rx: Receiver<DeviceRequest>,
    handle: SimHandle,
    stop: Arc<AtomicBool>,
    opts: LiveOptions,
) {
    let ticks_per_frame = ((opts.frame_interval / opts.dt).round() as u64).max(1);
    let start = Instant::now();
    let mut commands = 0u64;
    handle.frames.publish(sim.render());
    let drain = |sim: &mut Simulator, commands: &mut u64| -> bool {
        loop {
            match rx.try_recv() {
                Ok(req) => {
                    let response = sim.handle_line(&req.line);
                    *commands += 1;
                    let _ = req.reply.send(response);
                }
                Err(TryRecvError::Empty) => return true,
                Err(TryRecvError::Disconnected) => return false,
            }
        }
    };
    while !stop.load(Ordering::Relaxed) {
        let due = (start.elapsed().as_secs_f64() * opts.time_scale / opts.dt) as u64;
        // bounded catch-up after a stall
        let mut budget = 1000;
        while sim.ticks() < due && budget > 0 {
            drain(&mut sim, &mut commands);
            sim.step();
            budget -= 1;
            if sim.ticks().is_multiple_of(ticks_per_frame) {
                handle.frames.publish(sim.render());
            }
        }
        // every request sender may drop while the bridge still holds the slot;
        // keep running until told to stop
        drain(&mut sim, &mut commands);
        {
            let mut status = handle.status.lock().unwrap();
            status.clock = sim.clock();
            status.pose = sim.pose();
            status.last_response.clone_from(&sim.state.last_response);
            status.commands = commands;
        }
        let nap = (opts.dt / opts.time_scale).min(0.002);
        thread::sleep(Duration::from_secs_f64(nap));
    }
    handle.frames.close();
}
