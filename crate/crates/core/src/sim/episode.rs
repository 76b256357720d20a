//! Everything one trial's leaves read and mutate.

use std::fmt;

use crate::adaptive::{DataStore, StrategyRegistry};
use crate::bt::NodeStatus;

use super::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Approach,
    Grasp,
    Manipulate,
    Retract,
}

impl SegmentKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Approach => "approach",
            SegmentKind::Grasp => "grasp",
            SegmentKind::Manipulate => "manipulate",
            SegmentKind::Retract => "retract",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A motion segment as executed. `outcome` is Idle when it was halted.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub kind: SegmentKind,
    pub strategy: String,
    pub start_tick: u64,
    pub end_tick: u64,
    pub outcome: NodeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub strategy_id: String,
    /// Max recorded torque the choice was based on, N·m.
    pub max_torque: f64,
    pub sim_time: f64,
}

pub struct Episode {
    pub world: World,
    pub store: DataStore,
    pub registry: StrategyRegistry,
    pub device_id: String,
    pub trial: u32,
    pub margin: f64,
    pub selections: Vec<Selection>,
    pub segments: Vec<SegmentRecord>,
}

impl Episode {
    pub fn new(world: World, store: DataStore, registry: StrategyRegistry, trial: u32, margin: f64) -> Self {
        Self {
            device_id: world.device.id.clone(),
            world,
            store,
            registry,
            trial,
            margin,
            selections: Vec::new(),
            segments: Vec::new(),
        }
    }

    /// Simulated seconds spent inside motion segments.
    pub fn segment_time(&self) -> f64 {
        let ticks: u64 = self.segments.iter().map(|s| s.end_tick - s.start_tick).sum();
        ticks as f64 * self.world.dt()
    }
}
