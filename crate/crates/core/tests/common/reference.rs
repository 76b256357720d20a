//! A deliberately plain interpreter of the four composite rules, written
//! without reference to the engine's code.

use adaptive_bt::bt::NodeStatus;
use NodeStatus::{Failure, Running, Success};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Sequence,
    ReactiveSequence,
    Fallback,
    ReactiveFallback,
}

pub const KINDS: [Kind; 4] = [Kind::Sequence, Kind::ReactiveSequence, Kind::Fallback, Kind::ReactiveFallback];

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Leaf,
    Node(Kind, Vec<Shape>),
}

impl Shape {
    pub fn leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(_, c) => c.iter().map(Shape::leaves).sum(),
        }
    }
}

/// Every tree whose root is a composite, with composites nested at most
/// `depth` deep and exactly `leaves` leaves.
pub fn enumerate(depth: usize, leaves: usize) -> Vec<Shape> {
    if depth == 0 || leaves == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for children in child_lists(depth - 1, leaves) {
        for kind in KINDS {
            out.push(Shape::Node(kind, children.clone()));
        }
    }
    out
}

/// Ordered, non-empty child lists using exactly `leaves` leaves, where
/// each child is a leaf or a composite at most `depth` deep.
fn child_lists(depth: usize, leaves: usize) -> Vec<Vec<Shape>> {
    if leaves == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=leaves {
        let mut heads = Vec::new();
        if first == 1 {
            heads.push(Shape::Leaf);
        }
        heads.extend(enumerate(depth, first));
        for tail in child_lists(depth, leaves - first) {
            for h in &heads {
                let mut list = vec![h.clone()];
                list.extend(tail.iter().cloned());
                out.push(list);
            }
        }
    }
    out
}

pub enum RefTree {
    Leaf(usize),
    Node {
        kind: Kind,
        children: Vec<RefTree>,
        /// Child to resume from (memory composites).
        resume: usize,
        /// Whether the last tick left this node Running.
        running: bool,
    },
}

impl RefTree {
    pub fn new(shape: &Shape) -> Self {
        let mut next = 0;
        Self::build(shape, &mut next)
    }

    fn build(shape: &Shape, next: &mut usize) -> Self {
        match shape {
            Shape::Leaf => {
                *next += 1;
                RefTree::Leaf(*next - 1)
            }
            Shape::Node(kind, c) => RefTree::Node {
                kind: *kind,
                children: c.iter().map(|s| Self::build(s, next)).collect(),
                resume: 0,
                running: false,
            },
        }
    }

    fn reset(&mut self) {
        if let RefTree::Node { children, resume, running, .. } = self {
            *resume = 0;
            *running = false;
            for c in children {
                c.reset();
            }
        }
    }

    pub fn tick(&mut self, leaf: &mut dyn FnMut(usize) -> NodeStatus) -> NodeStatus {
        let RefTree::Node { kind, children, resume, running } = self else {
            let RefTree::Leaf(id) = self else { unreachable!() };
            return leaf(*id);
        };
        // `stop` ends the scan, `go` moves on to the next child
        let (stop, go) = match kind {
            Kind::Sequence | Kind::ReactiveSequence => (Failure, Success),
            Kind::Fallback | Kind::ReactiveFallback => (Success, Failure),
        };
        let reactive = matches!(kind, Kind::ReactiveSequence | Kind::ReactiveFallback);
        let start = if reactive { 0 } else { *resume };
        for i in start..children.len() {
            let s = children[i].tick(leaf);
            if s == Running {
                if reactive {
                    for later in &mut children[i + 1..] {
                        later.reset();
                    }
                } else {
                    *resume = i;
                }
                *running = true;
                return Running;
            }
            if s == stop {
                for c in children.iter_mut() {
                    c.reset();
                }
                *resume = 0;
                *running = false;
                return stop;
            }
            debug_assert_eq!(s, go);
        }
        for c in children.iter_mut() {
            c.reset();
        }
        *resume = 0;
        *running = false;
        go
    }
}
