//! Tick-driven behavior-tree engine.
//!
//! A [`Tree`] is ticked by the caller; every tick walks from the root to
//! the active leaves and returns the root's [`NodeStatus`] together with a
//! [`TickTrace`] of every node visited. Nodes keep their resume state
//! between ticks while Running, and halting a subtree resets it.
//!
//! Composite semantics:
//!
//! * `Sequence` resumes at the Running child; a Failure resets progress.
//! * `ReactiveSequence` re-ticks all children from the first one on every
//!   tick, so an earlier child turning Failure halts the Running one.
//! * `Fallback` and `ReactiveFallback` mirror the above with Success and
//!   Failure swapped.
//!
//! Decorators are `RetryUntilSuccessful`, `ForceFailure`, `ForceSuccess`,
//! `Inverter` and `SubTree`. `SwitchStatement` ticks exactly one case child.

mod blackboard;
mod leaf;
mod node;
mod tree;

pub use blackboard::{
    Blackboard, BlackboardError, FromValue, PortValue, Ports, ScopeId, Value, ValueType,
    FAILURE_REASON_KEY,
};
pub use leaf::{Action, Condition, Constant, Leaf, LeafContext, Stateful, StatefulAction, TickError};
pub use node::{exempt_reasons, CaseLabel, Exemption, NodeCategory, RetrySpec, TreeNode};
pub use tree::{RetryEvent, StructureError, TickTrace, TraceEntry, Tree};

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeStatus {
    #[default]
    Idle,
    Running,
    Success,
    Failure,
}

impl NodeStatus {
    pub fn is_done(self) -> bool {
        matches!(self, NodeStatus::Success | NodeStatus::Failure)
    }
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Idle => "Idle",
            NodeStatus::Running => "Running",
            NodeStatus::Success => "Success",
            NodeStatus::Failure => "Failure",
        })
    }
}
