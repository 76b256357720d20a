//! Articulated valve model.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("device `{id}`: {message}")]
    Invalid { id: String, message: String },
}

fn inf() -> f64 {
    f64::INFINITY
}

fn tightened_default() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceInstance {
    #[serde(default)]
    pub id: String,
    pub symmetry_order: u32,
    /// N·m/rad
    #[serde(default)]
    pub stiffness: f64,
    /// N·m·s/rad
    #[serde(default)]
    pub damping: f64,
    /// N·m
    #[serde(default)]
    pub static_friction: f64,
    /// rad; infinite when the valve spins freely.
    #[serde(default = "inf")]
    pub joint_limit: f64,
    /// N·m reported once the handle is pressed against its limit.
    #[serde(default)]
    pub limit_spike_torque: f64,
    #[serde(default)]
    pub dynamics_enabled: bool,
    /// Torque at which the valve counts as fully tightened.
    #[serde(default = "tightened_default")]
    pub tightened_threshold: f64,
    /// Current handle angle, rad.
    #[serde(default)]
    pub handle_angle: f64,
}

impl DeviceInstance {
    fn base(id: &str, symmetry_order: u32) -> Self {
        Self {
            id: id.to_string(),
            symmetry_order,
            stiffness: 0.0,
            damping: 0.0,
            static_friction: 0.0,
            joint_limit: f64::INFINITY,
            limit_spike_torque: 0.0,
            dynamics_enabled: false,
            tightened_threshold: tightened_default(),
            handle_angle: 0.0,
        }
    }

    /// Free-spinning valve driven purely by friction.
    pub fn test_a() -> Self {
        Self {
            static_friction: 0.05,
            ..Self::base("testA", 3)
        }
    }

    /// Damped-spring valve with a ±3 rad joint limit.
    pub fn test_b() -> Self {
        Self {
            stiffness: 0.18,
            damping: 0.1,
            static_friction: 0.02,
            joint_limit: 3.0,
            limit_spike_torque: 2.0,
            dynamics_enabled: true,
            ..Self::base("testB", 3)
        }
    }

    pub fn normal() -> Self {
        Self {
            stiffness: 0.25,
            damping: 0.1,
            static_friction: 0.02,
            dynamics_enabled: true,
            ..Self::base("normal", 3)
        }
    }

    pub fn stiff() -> Self {
        Self {
            stiffness: 0.7,
            ..Self::normal()
        }
        .with_id("stiff")
    }

    pub fn preset(id: &str) -> Option<Self> {
        match id {
            "testA" => Some(Self::test_a()),
            "testB" => Some(Self::test_b()),
            "normal" => Some(Self::normal()),
            "stiff" => Some(Self::stiff()),
            _ => None,
        }
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }

    pub fn symmetry_angle(&self) -> f64 {
        TAU / self.symmetry_order as f64
    }

    pub fn at_limit(&self) -> bool {
        self.joint_limit.is_finite() && self.handle_angle.abs() >= self.joint_limit
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let fail = |message: &str| {
            Err(DeviceError::Invalid {
                id: self.id.clone(),
                message: message.to_string(),
            })
        };
        if self.symmetry_order == 0 {
            return fail("symmetry_order must be ≥ 1");
        }
        if !(self.stiffness >= 0.0 && self.damping >= 0.0 && self.static_friction >= 0.0) {
            return fail("stiffness, damping and static_friction must be ≥ 0");
        }
        if !(self.joint_limit > 0.0) {
            return fail("joint_limit must be > 0");
        }
        if self.handle_angle.abs() > self.joint_limit || !self.handle_angle.is_finite() {
            return fail("handle_angle must lie within the joint limit");
        }
        Ok(())
    }
}

/// Torque the valve exerts against a twist at `twist_rate` with the handle
/// at its current angle. Zero when no twist is commanded.
pub fn reactive_torque(device: &DeviceInstance, twist_rate: f64) -> f64 {
    if twist_rate == 0.0 {
        return 0.0;
    }
    if !device.dynamics_enabled {
        return device.static_friction;
    }
    if device.at_limit() {
        return device.limit_spike_torque;
    }
    device.stiffness * device.handle_angle.abs() + device.damping * twist_rate.abs() + device.static_friction
}
