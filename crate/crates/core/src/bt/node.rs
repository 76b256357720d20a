use std::collections::BTreeSet;
use std::fmt;

use super::blackboard::{Blackboard, FromValue, PortValue, Ports, ScopeId, Value};
use super::leaf::{Leaf, LeafContext, TickError};
use super::tree::{RetryEvent, TickTrace, TraceEntry};
use super::NodeStatus;

/// Decides whether a child failure should be retried without consuming an
/// attempt. Evaluated against the blackboard before the failure reason is
/// cleared.
pub type Exemption = Box<dyn Fn(&Blackboard) -> bool + Send>;

/// An exemption that matches when `last_failure_reason` is one of `reasons`.
pub fn exempt_reasons<I, S>(reasons: I) -> Exemption
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let reasons: BTreeSet<String> = reasons.into_iter().map(Into::into).collect();
    Box::new(move |bb: &Blackboard| bb.failure_reason().is_some_and(|r| reasons.contains(r)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseLabel {
    Value(String),
    Default,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseLabel::Value(v) => f.write_str(v),
            CaseLabel::Default => f.write_str("<default>"),
        }
    }
}

pub struct RetrySpec {
    pub num_attempts: PortValue,
    pub exemption: Option<Exemption>,
    /// Blackboard key receiving the 1-based number of the current attempt.
    pub attempt_key: Option<String>,
}

impl RetrySpec {
    pub fn attempts(n: u32) -> Self {
        Self {
            num_attempts: PortValue::Literal(Value::Int(n as i64)),
            exemption: None,
            attempt_key: None,
        }
    }

    pub fn with_exemption(mut self, exemption: Exemption) -> Self {
        self.exemption = Some(exemption);
        self
    }

    pub fn with_attempt_key(mut self, key: impl Into<String>) -> Self {
        self.attempt_key = Some(key.into());
        self
    }
}

pub(crate) struct RetryState {
    spec: RetrySpec,
    limit: Option<u32>,
    failures: u32,
}

pub(crate) enum NodeKind<E> {
    Sequence { current: usize },
    ReactiveSequence { running: Option<usize> },
    Fallback { current: usize },
    ReactiveFallback { running: Option<usize> },
    Retry(RetryState),
    ForceFailure,
    ForceSuccess,
    Inverter,
    Switch {
        variable: PortValue,
        cases: Vec<CaseLabel>,
        active: Option<usize>,
    },
    SubTree { id: String },
    Leaf { leaf: Box<dyn Leaf<E>>, ports: Ports },
}

/// Category of a node, used for structural checks and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeCategory {
    Composite,
    Decorator,
    Switch,
    Leaf,
}

pub(crate) struct TickCtx<'a, E> {
    pub env: &'a mut E,
    pub bb: &'a mut Blackboard,
    pub trace: &'a mut TickTrace,
}

/// One node of an executable tree, owning its children and local state.
pub struct TreeNode<E> {
    name: String,
    pub(crate) kind: NodeKind<E>,
    pub(crate) children: Vec<TreeNode<E>>,
    scope: ScopeId,
    status: NodeStatus,
}

impl<E> fmt::Debug for TreeNode<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct(self.kind_name())
            .field("name", &self.name)
            .field("status", &self.status)
            .field("children", &self.children)
            .finish()
    }
}

impl<E> TreeNode<E> {
    fn new(name: impl Into<String>, kind: NodeKind<E>, children: Vec<TreeNode<E>>) -> Self {
        Self {
            name: name.into(),
            kind,
            children,
            scope: ScopeId::ROOT,
            status: NodeStatus::Idle,
        }
    }

    pub fn sequence(name: impl Into<String>, children: Vec<TreeNode<E>>) -> Self {
        Self::new(name, NodeKind::Sequence { current: 0 }, children)
    }

    pub fn reactive_sequence(name: impl Into<String>, children: Vec<TreeNode<E>>) -> Self {
        Self::new(name, NodeKind::ReactiveSequence { running: None }, children)
    }

    pub fn fallback(name: impl Into<String>, children: Vec<TreeNode<E>>) -> Self {
        Self::new(name, NodeKind::Fallback { current: 0 }, children)
    }

    pub fn reactive_fallback(name: impl Into<String>, children: Vec<TreeNode<E>>) -> Self {
        Self::new(name, NodeKind::ReactiveFallback { running: None }, children)
    }

    pub fn retry(name: impl Into<String>, spec: RetrySpec, child: TreeNode<E>) -> Self {
        let state = RetryState {
            spec,
            limit: None,
            failures: 0,
        };
        Self::new(name, NodeKind::Retry(state), vec![child])
    }

    pub fn force_failure(name: impl Into<String>, child: TreeNode<E>) -> Self {
        Self::new(name, NodeKind::ForceFailure, vec![child])
    }

    pub fn force_success(name: impl Into<String>, child: TreeNode<E>) -> Self {
        Self::new(name, NodeKind::ForceSuccess, vec![child])
    }

    pub fn inverter(name: impl Into<String>, child: TreeNode<E>) -> Self {
        Self::new(name, NodeKind::Inverter, vec![child])
    }

    /// Ticks the first case whose label equals the text value of `variable`,
    /// falling back to a [`CaseLabel::Default`] case.
    pub fn switch(
        name: impl Into<String>,
        variable: PortValue,
        cases: Vec<(CaseLabel, TreeNode<E>)>,
    ) -> Self {
        let (labels, children) = cases.into_iter().unzip();
        Self::new(
            name,
            NodeKind::Switch {
                variable,
                cases: labels,
                active: None,
            },
            children,
        )
    }

    pub fn subtree(name: impl Into<String>, id: impl Into<String>, child: TreeNode<E>) -> Self {
        Self::new(name, NodeKind::SubTree { id: id.into() }, vec![child])
    }

    pub fn leaf(name: impl Into<String>, leaf: impl Leaf<E> + 'static) -> Self {
        Self::leaf_with_ports(name, Box::new(leaf), Ports::new())
    }

    pub fn leaf_with_ports(name: impl Into<String>, leaf: Box<dyn Leaf<E>>, ports: Ports) -> Self {
        Self::new(name, NodeKind::Leaf { leaf, ports }, Vec::new())
    }

    /// Sets the blackboard scope this node reads and writes through.
    pub fn in_scope(mut self, scope: ScopeId) -> Self {
        self.scope = scope;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn status(&self) -> NodeStatus {
        self.status
    }

    pub fn children(&self) -> &[TreeNode<E>] {
        &self.children
    }

    pub fn scope(&self) -> ScopeId {
        self.scope
    }

    pub fn category(&self) -> NodeCategory {
        match self.kind {
            NodeKind::Sequence { .. }
            | NodeKind::ReactiveSequence { .. }
            | NodeKind::Fallback { .. }
            | NodeKind::ReactiveFallback { .. } => NodeCategory::Composite,
            NodeKind::Retry(_)
            | NodeKind::ForceFailure
            | NodeKind::ForceSuccess
            | NodeKind::Inverter
            | NodeKind::SubTree { .. } => NodeCategory::Decorator,
            NodeKind::Switch { .. } => NodeCategory::Switch,
            NodeKind::Leaf { .. } => NodeCategory::Leaf,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            NodeKind::Sequence { .. } => "Sequence",
            NodeKind::ReactiveSequence { .. } => "ReactiveSequence",
            NodeKind::Fallback { .. } => "Fallback",
            NodeKind::ReactiveFallback { .. } => "ReactiveFallback",
            NodeKind::Retry(_) => "RetryUntilSuccessful",
            NodeKind::ForceFailure => "ForceFailure",
            NodeKind::ForceSuccess => "ForceSuccess",
            NodeKind::Inverter => "Inverter",
            NodeKind::Switch { .. } => "SwitchStatement",
            NodeKind::SubTree { .. } => "SubTree",
            NodeKind::Leaf { .. } => "Leaf",
        }
    }

    pub fn subtree_id(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::SubTree { id } => Some(id),
            _ => None,
        }
    }

    /// Non-exempt failures counted by a retry node in its current run.
    pub fn retry_failures(&self) -> Option<u32> {
        match &self.kind {
            NodeKind::Retry(state) => Some(state.failures),
            _ => None,
        }
    }

    /// Total number of nodes in this subtree.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TreeNode::node_count).sum::<usize>()
    }

    /// Checks the child-count rules for every node below (and including)
    /// this one. Returns the name and a description of the first violation.
    pub fn check_structure(&self) -> Result<(), (String, String)> {
        let n = self.children.len();
        let problem = match &self.kind {
            NodeKind::Sequence { .. }
            | NodeKind::ReactiveSequence { .. }
            | NodeKind::Fallback { .. }
            | NodeKind::ReactiveFallback { .. }
                if n == 0 =>
            {
                Some("composite requires ≥1 child".to_string())
            }
            NodeKind::Switch { cases, .. } if n == 0 || cases.len() != n => {
                Some("switch requires ≥1 case, one child per case".to_string())
            }
            NodeKind::Retry(_)
            | NodeKind::ForceFailure
            | NodeKind::ForceSuccess
            | NodeKind::Inverter
            | NodeKind::SubTree { .. }
                if n != 1 =>
            {
                Some(format!("decorator requires exactly 1 child, found {n}"))
            }
            NodeKind::Leaf { .. } if n != 0 => Some(format!("leaf must not have children, found {n}")),
            _ => None,
        };
        if let Some(problem) = problem {
            return Err((self.name.clone(), problem));
        }
        self.children.iter().try_for_each(TreeNode::check_structure)
    }

    pub(crate) fn tick(&mut self, ctx: &mut TickCtx<'_, E>) -> NodeStatus {
        let slot = ctx.trace.entries.len();
        ctx.trace.entries.push(TraceEntry {
            node: self.name.clone(),
            status: NodeStatus::Idle,
        });
        let status = self.tick_inner(ctx);
        self.status = status;
        ctx.trace.entries[slot].status = status;
        status
    }

    fn error(&self, ctx: &mut TickCtx<'_, E>, message: impl Into<String>) -> NodeStatus {
        ctx.trace.errors.push(TickError {
            node: self.name.clone(),
            message: message.into(),
        });
        NodeStatus::Failure
    }

    fn read_port<T: FromValue>(&self, bb: &Blackboard, port: &PortValue) -> Result<T, String> {
        match port {
            PortValue::Literal(v) => {
                T::from_value(v).ok_or_else(|| format!("literal `{v}` is not a {}", T::TYPE))
            }
            PortValue::Key(key) => bb.get_as::<T>(self.scope, key).map_err(|e| e.to_string()),
        }
    }

    fn tick_inner(&mut self, ctx: &mut TickCtx<'_, E>) -> NodeStatus {
        use NodeStatus::*;
        match &mut self.kind {
            NodeKind::Sequence { current } => {
                let mut i = *current;
                while i < self.children.len() {
                    match self.children[i].tick(ctx) {
                        Success => i += 1,
                        Running => {
                            *current = i;
                            return Running;
                        }
                        Failure | Idle => {
                            *current = 0;
                            halt_all(&mut self.children, ctx.env, ctx.bb);
                            return Failure;
                        }
                    }
                }
                *current = 0;
                halt_all(&mut self.children, ctx.env, ctx.bb);
                Success
            }
            NodeKind::Fallback { current } => {
                let mut i = *current;
                while i < self.children.len() {
                    match self.children[i].tick(ctx) {
                        Failure | Idle => i += 1,
                        Running => {
                            *current = i;
                            return Running;
                        }
                        Success => {
                            *current = 0;
                            halt_all(&mut self.children, ctx.env, ctx.bb);
                            return Success;
                        }
                    }
                }
                *current = 0;
                halt_all(&mut self.children, ctx.env, ctx.bb);
                Failure
            }
            NodeKind::ReactiveSequence { running } => {
                tick_reactive(&mut self.children, running, ctx, Success)
            }
            NodeKind::ReactiveFallback { running } => {
                tick_reactive(&mut self.children, running, ctx, Failure)
            }
            NodeKind::Retry(_) => self.tick_retry(ctx),
            NodeKind::ForceFailure => match self.children[0].tick(ctx) {
                Running => Running,
                _ => Failure,
            },
            NodeKind::ForceSuccess => match self.children[0].tick(ctx) {
                Running => Running,
                _ => Success,
            },
            NodeKind::Inverter => match self.children[0].tick(ctx) {
                Running => Running,
                Success => Failure,
                Failure | Idle => Success,
            },
            NodeKind::SubTree { .. } => self.children[0].tick(ctx),
            NodeKind::Switch { .. } => self.tick_switch(ctx),
            NodeKind::Leaf { leaf, ports } => {
                let mut lctx = LeafContext {
                    env: &mut *ctx.env,
                    bb: &mut *ctx.bb,
                    scope: self.scope,
                    ports,
                    node: &self.name,
                };
                match leaf.tick(&mut lctx) {
                    Ok(Idle) => {
                        let e = lctx.error("leaf returned Idle");
                        ctx.trace.errors.push(e);
                        Failure
                    }
                    Ok(status) => status,
                    Err(e) => {
                        ctx.trace.errors.push(e);
                        Failure
                    }
                }
            }
        }
    }

    fn tick_retry(&mut self, ctx: &mut TickCtx<'_, E>) -> NodeStatus {
        let NodeKind::Retry(state) = &self.kind else {
            unreachable!()
        };
        let limit = match state.limit {
            Some(limit) => limit,
            None => match self.read_port::<i64>(ctx.bb, &state.spec.num_attempts) {
                Ok(n) if n >= 1 => n as u32,
                Ok(n) => return self.error(ctx, format!("num_attempts must be ≥ 1, got {n}")),
                Err(e) => return self.error(ctx, format!("num_attempts: {e}")),
            },
        };
        let failures = state.failures;
        if let Some(key) = state.spec.attempt_key.clone() {
            let attempt = (failures + 1).min(limit) as i64;
            if let Err(e) = ctx.bb.set(self.scope, &key, attempt) {
                return self.error(ctx, format!("attempt output: {e}"));
            }
        }

        let status = self.children[0].tick(ctx);
        let NodeKind::Retry(state) = &mut self.kind else {
            unreachable!()
        };
        state.limit = Some(limit);
        match status {
            NodeStatus::Running => NodeStatus::Running,
            NodeStatus::Success => {
                state.limit = None;
                state.failures = 0;
                NodeStatus::Success
            }
            NodeStatus::Failure | NodeStatus::Idle => {
                let exempt = state.spec.exemption.as_ref().is_some_and(|f| f(ctx.bb));
                let reason = ctx.bb.failure_reason().map(str::to_string);
                ctx.bb.clear_failure_reason();
                if !exempt {
                    state.failures += 1;
                }
                let exhausted = state.failures >= limit;
                ctx.trace.retries.push(RetryEvent {
                    node: self.name.clone(),
                    reason,
                    exempt,
                    failures: state.failures,
                    exhausted,
                });
                if exhausted {
                    state.limit = None;
                    state.failures = 0;
                }
                self.children[0].halt(ctx.env, ctx.bb);
                if exhausted {
                    NodeStatus::Failure
                } else {
                    // retry on the next tick so an immediately failing child
                    // cannot spin inside a single tick
                    NodeStatus::Running
                }
            }
        }
    }

    fn tick_switch(&mut self, ctx: &mut TickCtx<'_, E>) -> NodeStatus {
        let NodeKind::Switch {
            variable, cases, ..
        } = &self.kind
        else {
            unreachable!()
        };
        let value: String = match self.read_port(ctx.bb, variable) {
            Ok(v) => v,
            Err(e) => return self.error(ctx, format!("variable: {e}")),
        };
        let selected = cases
            .iter()
            .position(|c| matches!(c, CaseLabel::Value(v) if *v == value))
            .or_else(|| cases.iter().position(|c| *c == CaseLabel::Default));
        let NodeKind::Switch { active, .. } = &mut self.kind else {
            unreachable!()
        };
        let previous = *active;
        let Some(selected) = selected else {
            *active = None;
            if let Some(prev) = previous {
                self.children[prev].halt(ctx.env, ctx.bb);
            }
            return self.error(ctx, format!("no case matches `{value}` and there is no default"));
        };
        if let Some(prev) = previous.filter(|&p| p != selected) {
            self.children[prev].halt(ctx.env, ctx.bb);
        }
        let status = self.children[selected].tick(ctx);
        let NodeKind::Switch { active, .. } = &mut self.kind else {
            unreachable!()
        };
        *active = (status == NodeStatus::Running).then_some(selected);
        status
    }

    /// Interrupts this subtree: Running leaves get their halt callback,
    /// and all node-local state returns to its initial value.
    pub(crate) fn halt(&mut self, env: &mut E, bb: &mut Blackboard) {
        match &mut self.kind {
            NodeKind::Leaf { leaf, ports } => {
                if self.status == NodeStatus::Running {
                    let mut lctx = LeafContext {
                        env,
                        bb,
                        scope: self.scope,
                        ports,
                        node: &self.name,
                    };
                    leaf.halt(&mut lctx);
                }
            }
            kind => {
                match kind {
                    NodeKind::Sequence { current } | NodeKind::Fallback { current } => *current = 0,
                    NodeKind::ReactiveSequence { running }
                    | NodeKind::ReactiveFallback { running } => *running = None,
                    NodeKind::Retry(state) => {
                        state.limit = None;
                        state.failures = 0;
                    }
                    NodeKind::Switch { active, .. } => *active = None,
                    _ => {}
                }
                halt_all(&mut self.children, env, bb);
            }
        }
        self.status = NodeStatus::Idle;
    }
}

fn halt_all<E>(children: &mut [TreeNode<E>], env: &mut E, bb: &mut Blackboard) {
    for child in children {
        child.halt(env, bb);
    }
}

/// Shared body of ReactiveSequence (`pass` = Success) and ReactiveFallback
/// (`pass` = Failure): every tick restarts from the first child, children
/// returning `pass` are skipped over, anything else ends the tick.
fn tick_reactive<E>(
    children: &mut [TreeNode<E>],
    running: &mut Option<usize>,
    ctx: &mut TickCtx<'_, E>,
    pass: NodeStatus,
) -> NodeStatus {
    for i in 0..children.len() {
        let status = match children[i].tick(ctx) {
            NodeStatus::Idle => NodeStatus::Failure,
            s => s,
        };
        if status == pass {
            continue;
        }
        if status == NodeStatus::Running {
            if let Some(prev) = running.filter(|&p| p != i) {
                children[prev].halt(ctx.env, ctx.bb);
            }
            *running = Some(i);
            return NodeStatus::Running;
        }
        *running = None;
        halt_all(children, ctx.env, ctx.bb);
        return status;
    }
    *running = None;
    halt_all(children, ctx.env, ctx.bb);
    pass
}
