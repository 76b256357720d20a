//! Shared helpers for the integration tests and the acceptance harness.
#![allow(dead_code)]

pub mod reference;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adaptive_bt::bt::{Blackboard, Leaf, LeafContext, NodeStatus, TickError, Tree, TreeNode};

pub use reference::{Kind, RefTree, Shape};

/// Environment for scripted trees: the current root tick and a log of
/// leaf ticks.
pub struct Script {
    pub tick: usize,
    pub schedules: Vec<Vec<NodeStatus>>,
    pub log: Vec<usize>,
}

struct Scripted(usize);

impl Leaf<Script> for Scripted {
    fn tick(&mut self, ctx: &mut LeafContext<'_, Script>) -> Result<NodeStatus, TickError> {
        let env = &mut *ctx.env;
        env.log.push(self.0);
        let s = &env.schedules[self.0];
        Ok(s[env.tick.min(s.len() - 1)])
    }
}

fn engine_node(shape: &Shape, next_leaf: &mut usize) -> TreeNode<Script> {
    match shape {
        Shape::Leaf => {
            let id = *next_leaf;
            *next_leaf += 1;
            TreeNode::leaf(format!("L{id}"), Scripted(id))
        }
        Shape::Node(kind, children) => {
            let kids = children.iter().map(|c| engine_node(c, next_leaf)).collect();
            match kind {
                Kind::Sequence => TreeNode::sequence("seq", kids),
                Kind::ReactiveSequence => TreeNode::reactive_sequence("rseq", kids),
                Kind::Fallback => TreeNode::fallback("fb", kids),
                Kind::ReactiveFallback => TreeNode::reactive_fallback("rfb", kids),
            }
        }
    }
}

pub fn engine_tree(shape: &Shape) -> Tree<Script> {
    Tree::new(engine_node(shape, &mut 0), Blackboard::new()).expect("enumerated trees are well formed")
}

/// Root statuses and per-tick leaf visit order from the engine.
pub fn run_engine(shape: &Shape, schedules: &[Vec<NodeStatus>]) -> Vec<(NodeStatus, Vec<usize>)> {
    let mut tree = engine_tree(shape);
    let mut env = Script {
        tick: 0,
        schedules: schedules.to_vec(),
        log: Vec::new(),
    };
    let len = schedules.iter().map(Vec::len).max().unwrap_or(1);
    (0..len)
        .map(|t| {
            env.tick = t;
            env.log.clear();
            let (status, _) = tree.tick(&mut env);
            (status, env.log.clone())
        })
        .collect()
}

pub fn run_reference(shape: &Shape, schedules: &[Vec<NodeStatus>]) -> Vec<(NodeStatus, Vec<usize>)> {
    let mut tree = RefTree::new(shape);
    let len = schedules.iter().map(Vec::len).max().unwrap_or(1);
    (0..len)
        .map(|t| {
            let mut log = Vec::new();
            let status = tree.tick(&mut |leaf| {
                log.push(leaf);
                let s = &schedules[leaf];
                s[t.min(s.len() - 1)]
            });
            (status, log)
        })
        .collect()
}

const STATUSES: [NodeStatus; 3] = [NodeStatus::Success, NodeStatus::Failure, NodeStatus::Running];

/// All schedule sets of `len` ticks for `leaves` leaves.
fn all_schedules(leaves: usize, len: usize) -> Vec<Vec<Vec<NodeStatus>>> {
    let cells = leaves * len;
    let total = 3usize.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut flat = Vec::with_capacity(cells);
            for _ in 0..cells {
                flat.push(STATUSES[code % 3]);
                code /= 3;
            }
            flat.chunks(len).map(<[NodeStatus]>::to_vec).collect()
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub trees: usize,
    pub cases: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<String>,
}

/// Compares engine and reference on every composite tree of at most three
/// levels (root, inner composites, leaves) with ≤ 4 leaves, for schedules of 1 to 4 ticks. Trees with at most
/// `exhaustive_leaves` leaves get every schedule; larger trees get
/// `samples` random schedule sets per length.
pub fn oracle_check(exhaustive_leaves: usize, samples: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport::default();
    for leaves in 1..=4 {
        let shapes = reference::enumerate(2, leaves);
        report.trees += shapes.len();
        for len in 1..=4 {
            let schedule_sets = if leaves <= exhaustive_leaves {
                all_schedules(leaves, len)
            } else {
                (0..samples)
                    .map(|_| {
                        (0..leaves)
                            .map(|_| (0..len).map(|_| STATUSES[rng.random_range(0..3)]).collect())
                            .collect()
                    })
                    .collect()
            };
            for shape in &shapes {
                for schedules in &schedule_sets {
                    report.cases += 1;
                    let engine = run_engine(shape, schedules);
                    let expected = run_reference(shape, schedules);
                    if engine != expected {
                        report.mismatches += 1;
                        report.first_mismatch.get_or_insert_with(|| {
                            format!("{shape:?} with {schedules:?}: engine {engine:?}, reference {expected:?}")
                        });
                    }
                }
            }
        }
    }
    report
}
