//! Deterministic in-process rig: the client drives a [`Simulator`] directly,
//! with simulated time advancing only when the client asks for a frame.

use std::cell::RefCell;
use std::rc::Rc;
use std::time::Duration;

use super::connection::{DeviceLink, LinkError};
use super::track::{FrameSource, FrameSourceError};
use crate::frame::Frame;
use crate::sim::{Pose, RobotParams, SimError, Simulator, WorldModel};
use crate::transport::{chunk, reassemble, DEFAULT_MTU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigOptions {
    pub dt: f64,
    pub frame_interval: f64,
    pub mtu: usize,
}

impl Default for RigOptions {
    fn default() -> Self {
        Self {
            dt: crate::sim::DEFAULT_DT,
            frame_interval: crate::sim::DEFAULT_FRAME_INTERVAL,
            mtu: DEFAULT_MTU,
        }
    }
}

#[derive(Debug)]
struct RigState {
    sim: Simulator,
    ticks_per_frame: u64,
    mtu: usize,
    started: bool,
    closed: bool,
    /// Lines still accepted before the link drops.
    budget: Option<u64>,
    lines: u64,
    trail: Vec<(f64, Pose)>,
}

/// Shared simulator behind a [`RigLink`] and a [`RigCamera`].
#[derive(Debug, Clone)]
pub struct SimRig {
    state: Rc<RefCell<RigState>>,
}

impl SimRig {
    pub fn new(world: WorldModel, params: RobotParams, opts: RigOptions) -> Result<Self, SimError> {
        let sim = Simulator::new(world, params, opts.dt)?;
        let ticks_per_frame = ((opts.frame_interval / opts.dt).round() as u64).max(1);
        Ok(Self {
            state: Rc::new(RefCell::new(RigState {
                sim,
                ticks_per_frame,
                mtu: opts.mtu.max(1),
                started: false,
                closed: false,
                budget: None,
                lines: 0,
                trail: Vec::new(),
            })),
        })
    }

    pub fn link(&self) -> RigLink {
        RigLink {
            state: self.state.clone(),
        }
    }

    pub fn camera(&self) -> RigCamera {
        RigCamera {
            state: self.state.clone(),
        }
    }

    pub fn pose(&self) -> Pose {
        self.state.borrow().sim.pose()
    }

    pub fn clock(&self) -> f64 {
        self.state.borrow().sim.clock()
    }

    /// Lines the device has received so far.
    pub fn lines_received(&self) -> u64 {
        self.state.borrow().lines
    }

    /// Robot pose at each delivered frame.
    pub fn trail(&self) -> Vec<(f64, Pose)> {
        self.state.borrow().trail.clone()
    }

    /// Drops the link after `n` more lines have been delivered.
    pub fn disconnect_after(&self, n: u64) {
        self.state.borrow_mut().budget = Some(n);
    }

    pub fn disconnect(&self) {
        self.state.borrow_mut().closed = true;
    }

    pub fn with_sim<T>(&self, f: impl FnOnce(&mut Simulator) -> T) -> T {
        f(&mut self.state.borrow_mut().sim)
    }
}

pub struct RigLink {
    state: Rc<RefCell<RigState>>,
}

impl DeviceLink for RigLink {
    fn transact(&mut self, line: &str, _timeout: Duration) -> Result<String, LinkError> {
        let mut st = self.state.borrow_mut();
        if st.closed {
            return Err(LinkError::Closed);
        }
        if let Some(left) = st.budget {
            if left == 0 {
                st.closed = true;
                return Err(LinkError::Closed);
            }
            st.budget = Some(left - 1);
        }
        let packets = chunk(format!("{line}\n").as_bytes(), st.mtu);
        let bytes = reassemble(&packets);
        let responses = st.sim.feed(&bytes);
        st.lines += responses.len() as u64;
        responses
            .into_iter()
            .next()
            .map(|r| r.trim_end().to_string())
            .ok_or(LinkError::Closed)
    }
}

pub struct RigCamera {
    state: Rc<RefCell<RigState>>,
}

impl FrameSource for RigCamera {
    /// The first frame shows time zero; every later call advances one frame
    /// interval.
    fn next_frame(&mut self) -> Result<Frame, FrameSourceError> {
        let mut st = self.state.borrow_mut();
        if st.started {
            for _ in 0..st.ticks_per_frame {
                st.sim.step();
            }
        }
        st.started = true;
        let (clock, pose) = (st.sim.clock(), st.sim.pose());
        st.trail.push((clock, pose));
        Ok(st.sim.render())
    }
}
