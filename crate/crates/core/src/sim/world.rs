//! Simulated world state and forward-Euler time integration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::device::{reactive_torque, DeviceInstance};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("dt must be > 0, got {0}")]
    InvalidDt(f64),
    #[error("cannot twist the handle while it is not grasped")]
    NotGrasped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Idle,
    /// Twist at the given rate, rad/s.
    Twist(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub torque: f64,
    /// Handle rotation produced by this step, rad.
    pub delta: f64,
}

/// A segment failure scheduled at a given step of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingFailure {
    pub at_step: u64,
}

#[derive(Debug, Clone)]
pub struct World {
    pub device: DeviceInstance,
    dt: f64,
    ticks: u64,
    pub approached: bool,
    grasp: Option<Grasp>,
    rng: ChaCha8Rng,
    pub last_torque: f64,
    start_angle: f64,
}

#[derive(Debug, Clone, Copy)]
struct Grasp {
    reference: f64,
    origin: f64,
}

impl World {
    pub fn new(device: DeviceInstance, dt: f64, seed: u64) -> Result<Self, SimError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::InvalidDt(dt));
        }
        Ok(Self {
            start_angle: device.handle_angle,
            device,
            dt,
            ticks: 0,
            approached: false,
            grasp: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_torque: 0.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Elapsed simulated time, s.
    pub fn sim_time(&self) -> f64 {
        self.ticks as f64 * self.dt
    }

    /// Number of whole steps needed to cover `seconds`.
    pub fn steps_for(&self, seconds: f64) -> u64 {
        ((seconds / self.dt).round() as u64).max(1)
    }

    pub fn grasped(&self) -> bool {
        self.grasp.is_some()
    }

    /// Grips the handle, taking `reference` as its angle in the strategy's
    /// frame at this instant.
    pub fn grasp(&mut self, reference: f64) {
        self.grasp = Some(Grasp {
            reference,
            origin: self.device.handle_angle,
        });
    }

    pub fn release(&mut self) {
        self.grasp = None;
        self.approached = false;
    }

    pub fn grasp_reference(&self) -> Option<f64> {
        self.grasp.map(|g| g.reference)
    }

    /// Handle angle in the frame fixed at grasp time.
    pub fn angle_rel_grasp(&self) -> Option<f64> {
        self.grasp
            .map(|g| g.reference + (self.device.handle_angle - g.origin))
    }

    /// Total handle rotation since the world was created.
    pub fn rotation_since_start(&self) -> f64 {
        self.device.handle_angle - self.start_angle
    }

    /// Draws the two numbers every segment consumes at its start and
    /// returns the failing step, if any, of a segment of `steps` steps.
    pub fn draw_segment_failure(&mut self, p: f64, steps: u64) -> Option<PendingFailure> {
        let u: f64 = self.rng.random();
        let frac: f64 = self.rng.random();
        (u < p).then(|| PendingFailure {
            at_step: (1 + (frac * steps as f64) as u64).min(steps.max(1)),
        })
    }

    pub fn step(&mut self, command: Command) -> Result<StepOutcome, SimError> {
        let rate = match command {
            Command::Idle => 0.0,
            Command::Twist(r) => r,
        };
        if rate != 0.0 && !self.grasped() {
            return Err(SimError::NotGrasped);
        }
        let before = self.device.handle_angle;
        if rate != 0.0 {
            let limit = self.device.joint_limit;
            self.device.handle_angle = (before + rate * self.dt).clamp(-limit, limit);
        }
        self.ticks += 1;
        let torque = reactive_torque(&self.device, rate);
        self.last_torque = torque;
        Ok(StepOutcome {
            torque,
            delta: self.device.handle_angle - before,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grasped(device: DeviceInstance) -> World {
        let mut w = World::new(device, 0.1, 1).unwrap();
        w.grasp(0.0);
        w
    }

    #[test]
    fn euler_step() {
        let mut w = grasped(DeviceInstance::test_a());
        w.step(Command::Twist(0.157)).unwrap();
        assert!((w.device.handle_angle - 0.0157).abs() < 1e-12);
        assert!((w.sim_time() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn clamps_at_joint_limit() {
        let mut d = DeviceInstance::test_b();
        d.handle_angle = 2.95;
        let mut w = grasped(d);
        let out = w.step(Command::Twist(1.0)).unwrap();
        assert_eq!(w.device.handle_angle, 3.0);
        assert_eq!(out.torque, 2.0);
    }

    #[test]
    fn twisting_requires_grasp() {
        let mut w = World::new(DeviceInstance::test_a(), 0.1, 1).unwrap();
        assert_eq!(w.step(Command::Twist(0.1)), Err(SimError::NotGrasped));
        assert_eq!(w.ticks(), 0);
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(World::new(DeviceInstance::test_a(), 0.0, 1).is_err());
    }

    #[test]
    fn seeded_replay_is_identical() {
        let run = || {
            let mut w = grasped(DeviceInstance::test_b());
            let mut trace = Vec::new();
            for i in 0..100 {
                let r = if w.draw_segment_failure(0.5, 10).is_some() { 0.2 } else { 0.1 };
                trace.push(w.step(Command::Twist(r * (i % 3) as f64)).unwrap().torque.to_bits());
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn relative_angle_tracks_grasp_frame() {
        let mut w = World::new(DeviceInstance::test_a(), 0.1, 1).unwrap();
        w.device.handle_angle = 1.0;
        w.grasp(0.5);
        w.step(Command::Twist(1.0)).unwrap();
        assert!((w.angle_rel_grasp().unwrap() - 0.6).abs() < 1e-12);
    }
}
