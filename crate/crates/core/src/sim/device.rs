//! The virtual device: command execution and the fixed-timestep motor/pose
//! integrator.

use serde::{Deserialize, Serialize};

use super::kinematics::shared_rate_delta;
use super::params::{Pose, RobotParams};
use crate::command::{self, CommandAst, ErrorKind};
use crate::transport::FramingError;

pub const OK_RESPONSE: &str = "ok\n";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorState {
    pub remaining_steps: i64,
    /// steps/second
    pub speed: u32,
    pub executed_steps: i64,
    /// Fractional steps owed from previous ticks.
    #[serde(skip)]
    budget: f64,
}

impl MotorState {
    fn load(&mut self, steps: i64, speed: u32) {
        self.remaining_steps = steps;
        self.speed = speed;
        self.budget = 0.0;
    }

    fn halt(&mut self) {
        self.remaining_steps = 0;
        self.budget = 0.0;
    }

    /// Consumes up to `speed * dt` steps, returning the signed count taken.
    fn advance(&mut self, dt: f64) -> i64 {
        if self.remaining_steps == 0 {
            self.budget = 0.0;
            return 0;
        }
        self.budget += self.speed as f64 * dt;
        // tolerate representation error in speed * dt (e.g. 9.999999999)
        let available = (self.budget + 1e-9).floor().max(0.0) as i64;
        let taken = available.min(self.remaining_steps.abs());
        self.budget -= taken as f64;
        let signed = taken * self.remaining_steps.signum();
        self.remaining_steps -= signed;
        self.executed_steps += signed;
        if self.remaining_steps == 0 {
            self.budget = 0.0;
        }
        signed
    }

    pub fn is_idle(&self) -> bool {
        self.remaining_steps == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceState {
    pub pose: Pose,
    pub left: MotorState,
    pub right: MotorState,
    /// Simulated seconds.
    pub clock: f64,
    pub last_response: String,
}

impl DeviceState {
    pub fn at(pose: Pose) -> Self {
        Self {
            pose,
            ..Default::default()
        }
    }

    pub fn is_idle(&self) -> bool {
        self.left.is_idle() && self.right.is_idle()
    }

    /// Executes a parsed command. A `go` preempts whatever is in flight.
    /// Invalid commands leave the state untouched apart from `last_response`.
    pub fn exec(&mut self, ast: &CommandAst, params: &RobotParams) -> String {
        let response = match command::validate(ast, params) {
            Err(e) => error_response(e.kind),
            Ok(()) => {
                match ast {
                    CommandAst::Go(cmd) => {
                        let speed = cmd.speed.unwrap_or(params.default_speed);
                        self.left.load(cmd.left_steps as i64, speed);
                        self.right.load(cmd.right_steps as i64, speed);
                    }
                    CommandAst::Stop => {
                        self.left.halt();
                        self.right.halt();
                    }
                }
                OK_RESPONSE.to_string()
            }
        };
        self.last_response.clone_from(&response);
        response
    }

    /// Parses and executes one command line as received from the link.
    pub fn exec_line(&mut self, line: &Result<String, FramingError>, params: &RobotParams) -> String {
        let response = match line {
            Ok(text) => match command::parse(text) {
                Ok(ast) => return self.exec(&ast, params),
                Err(e) => error_response(e.kind),
            },
            Err(_) => error_response(ErrorKind::Malformed),
        };
        self.last_response.clone_from(&response);
        response
    }

    /// Advances the motors and pose by one fixed timestep.
    pub fn tick(&mut self, dt: f64, params: &RobotParams) {
        debug_assert!(dt > 0.0);
        let dl = self.left.advance(dt);
        let dr = self.right.advance(dt);
        self.pose = shared_rate_delta(params, dl, dr, &self.pose);
        self.clock += dt;
    }
}

pub fn error_response(kind: ErrorKind) -> String {
    format!("err {kind}\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::MotionCommand;

    fn go(l: i32, r: i32, s: Option<u32>) -> CommandAst {
        CommandAst::Go(MotionCommand::new(l, r, s))
    }

    #[test]
    fn go_loads_both_motors() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        assert_eq!(s.exec(&go(1000, 1000, Some(1000)), &p), "ok\n");
        assert_eq!(s.left.remaining_steps, 1000);
        assert_eq!(s.right.remaining_steps, 1000);
        assert_eq!(s.left.speed, 1000);
    }

    #[test]
    fn stop_halts() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        s.exec(&go(1000, -300, None), &p);
        assert_eq!(s.exec(&CommandAst::Stop, &p), "ok\n");
        assert!(s.is_idle());
    }

    #[test]
    fn go_preempts_with_default_speed() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        s.exec(&go(1000, 1000, Some(1000)), &p);
        for _ in 0..50 {
            s.tick(0.01, &p);
        }
        assert_eq!(s.left.remaining_steps, 500);
        s.exec(&go(100, 100, None), &p);
        assert_eq!(s.left.remaining_steps, 100);
        assert_eq!(s.left.speed, 500);
        assert_eq!(s.right.speed, 500);
    }

    #[test]
    fn invalid_command_leaves_state() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        s.exec(&go(10, 10, Some(100)), &p);
        let before = s.clone();
        assert_eq!(s.exec(&go(0, 0, Some(5000)), &p), "err BadArgument\n");
        assert_eq!(s.left, before.left);
        assert_eq!(s.pose, before.pose);
    }

    #[test]
    fn tick_consumes_rate_times_dt() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        s.exec(&go(1000, 1000, Some(1000)), &p);
        s.tick(0.1, &p);
        assert_eq!(s.left.executed_steps, 100);
        assert_eq!(s.right.executed_steps, 100);
        assert_eq!(s.left.remaining_steps, 900);
    }

    #[test]
    fn idle_tick_only_advances_clock() {
        let p = RobotParams::default();
        let mut s = DeviceState::at(Pose::new(1.0, 2.0, 0.3));
        let pose = s.pose;
        s.tick(1.0, &p);
        assert_eq!(s.pose, pose);
        assert_eq!(s.clock, 1.0);
    }

    #[test]
    fn ten_small_ticks_equal_one_large() {
        let p = RobotParams::default();
        let mut fine = DeviceState::default();
        let mut coarse = DeviceState::default();
        fine.exec(&go(5000, 5000, Some(700)), &p);
        coarse.exec(&go(5000, 5000, Some(700)), &p);
        for _ in 0..10 {
            fine.tick(0.1, &p);
        }
        coarse.tick(1.0, &p);
        assert_eq!(fine.left.executed_steps, coarse.left.executed_steps);
        assert_eq!(fine.left.executed_steps, 700);
        assert!((fine.pose.x - coarse.pose.x).abs() < 1e-12);
    }

    #[test]
    fn fractional_rates_accumulate() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        s.exec(&go(1000, 1000, Some(333)), &p);
        for _ in 0..100 {
            s.tick(0.01, &p);
        }
        assert_eq!(s.left.executed_steps, 333);
    }

    #[test]
    fn framing_error_answers_malformed() {
        let p = RobotParams::default();
        let mut s = DeviceState::default();
        assert_eq!(s.exec_line(&Err(FramingError::Oversized), &p), "err Malformed\n");
        assert_eq!(s.exec_line(&Ok("fly(1)".into()), &p), "err UnknownFunction\n");
        assert_eq!(s.last_response, "err UnknownFunction\n");
    }
}
