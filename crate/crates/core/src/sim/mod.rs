//! Seeded, fixed-step valve simulator and the leaves that drive it.

pub mod device;
pub mod episode;
pub mod leaves;
pub mod world;

pub use device::{reactive_torque, DeviceError, DeviceInstance};
pub use episode::{Episode, SegmentKind, SegmentRecord, Selection};
pub use leaves::{leaf_models, leaf_registry, REASON_CONFIG};
pub use world::{Command, PendingFailure, SimError, StepOutcome, World};
