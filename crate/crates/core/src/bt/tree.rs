use thiserror::Error;

use super::blackboard::Blackboard;
use super::leaf::TickError;
use super::node::{TickCtx, TreeNode};
use super::NodeStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub node: String,
    pub status: NodeStatus,
}

/// A failure observed by a retry decorator.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryEvent {
    pub node: String,
    pub reason: Option<String>,
    pub exempt: bool,
    /// Non-exempt failures counted so far, including this one.
    pub failures: u32,
    pub exhausted: bool,
}

/// Everything observed during one root tick, in tick order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickTrace {
    pub entries: Vec<TraceEntry>,
    pub errors: Vec<TickError>,
    pub retries: Vec<RetryEvent>,
}

impl TickTrace {
    pub fn status_of(&self, node: &str) -> Option<NodeStatus> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.node == node)
            .map(|e| e.status)
    }

    pub fn ticked(&self, node: &str) -> usize {
        self.entries.iter().filter(|e| e.node == node).count()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.node.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node `{node}`: {problem}")]
pub struct StructureError {
    pub node: String,
    pub problem: String,
}

/// An executable tree together with the blackboard its nodes are wired to.
pub struct Tree<E> {
    root: TreeNode<E>,
    blackboard: Blackboard,
    ticks: u64,
}

impl<E> Tree<E> {
    pub fn new(root: TreeNode<E>, blackboard: Blackboard) -> Result<Self, StructureError> {
        root.check_structure()
            .map_err(|(node, problem)| StructureError { node, problem })?;
        Ok(Self {
            root,
            blackboard,
            ticks: 0,
        })
    }

    /// Propagates one tick from the root.
    pub fn tick(&mut self, env: &mut E) -> (NodeStatus, TickTrace) {
        let mut trace = TickTrace::default();
        let mut ctx = TickCtx {
            env,
            bb: &mut self.blackboard,
            trace: &mut trace,
        };
        let status = self.root.tick(&mut ctx);
        self.ticks += 1;
        (status, trace)
    }

    /// Halts every Running node and resets all node-local state.
    pub fn halt(&mut self, env: &mut E) {
        self.root.halt(env, &mut self.blackboard);
    }

    pub fn root(&self) -> &TreeNode<E> {
        &self.root
    }

    pub fn root_status(&self) -> NodeStatus {
        self.root.status()
    }

    pub fn blackboard(&self) -> &Blackboard {
        &self.blackboard
    }

    pub fn blackboard_mut(&mut self) -> &mut Blackboard {
        &mut self.blackboard
    }

    pub fn tick_count(&self) -> u64 {
        self.ticks
    }
}
