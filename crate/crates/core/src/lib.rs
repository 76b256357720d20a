//! Reactive behavior trees for adaptive manipulation.
//!
//! * [`bt`]: the tick-driven engine (composites, decorators, blackboard).
//! * [`def`]: loading and validating trees from an XML definition.
//! * [`adaptive`]: strategies, the force/torque data store and strategy
//!   selection, plus the feasibility conditions.
//! * [`sim`]: a seeded, time-stepped valve simulator and the episode leaves.
//! * [`bench`]: the canonical adaptive tree, experiment runner and CLI.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod bench;
pub mod bt;
pub mod def;
pub mod sim;
