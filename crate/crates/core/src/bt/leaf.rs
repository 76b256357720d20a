//! Leaf nodes: the contract between the engine and user-supplied actions
//! and conditions.

use std::fmt;

use super::blackboard::{Blackboard, FromValue, PortValue, Ports, ScopeId, Value};
use super::NodeStatus;

/// An execution error raised while ticking a node. The engine records it
/// in the trace and the node returns Failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TickError {
    pub node: String,
    pub message: String,
}

impl fmt::Display for TickError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.node, self.message)
    }
}

impl std::error::Error for TickError {}

/// What a leaf sees while it is being ticked or halted.
pub struct LeafContext<'a, E> {
    pub env: &'a mut E,
    pub(crate) bb: &'a mut Blackboard,
    pub(crate) scope: ScopeId,
    pub(crate) ports: &'a Ports,
    pub(crate) node: &'a str,
}

impl<'a, E> LeafContext<'a, E> {
    pub fn node_name(&self) -> &str {
        self.node
    }

    pub fn error(&self, message: impl Into<String>) -> TickError {
        TickError {
            node: self.node.to_string(),
            message: message.into(),
        }
    }

    pub fn has_port(&self, port: &str) -> bool {
        self.ports.contains_key(port)
    }

    /// Reads an input port, resolving blackboard bindings in the leaf's scope.
    pub fn input<T: FromValue>(&self, port: &str) -> Result<T, TickError> {
        let binding = self
            .ports
            .get(port)
            .ok_or_else(|| self.error(format!("port `{port}` is not connected")))?;
        match binding {
            PortValue::Literal(v) => T::from_value(v).ok_or_else(|| {
                self.error(format!("port `{port}`: literal `{v}` is not a {}", T::TYPE))
            }),
            PortValue::Key(key) => self
                .bb
                .get_as::<T>(self.scope, key)
                .map_err(|e| self.error(format!("port `{port}`: {e}"))),
        }
    }

    /// Like [`input`](Self::input) but yields `default` for an unconnected port.
    pub fn input_or<T: FromValue>(&self, port: &str, default: T) -> Result<T, TickError> {
        if self.has_port(port) {
            self.input(port)
        } else {
            Ok(default)
        }
    }

    /// Writes an output port. The port must be bound to a blackboard key.
    pub fn output(&mut self, port: &str, value: impl Into<Value>) -> Result<(), TickError> {
        match self.ports.get(port) {
            Some(PortValue::Key(key)) => {
                let key = key.clone();
                self.bb
                    .set(self.scope, &key, value)
                    .map_err(|e| self.error(format!("port `{port}`: {e}")))
            }
            Some(PortValue::Literal(_)) => Err(self.error(format!(
                "output port `{port}` must be bound to a blackboard key"
            ))),
            None => Err(self.error(format!("port `{port}` is not connected"))),
        }
    }

    /// Records why this leaf is failing; read by retry exemption predicates.
    pub fn set_failure_reason(&mut self, reason: &str) {
        self.bb.set_failure_reason(reason);
    }

    pub fn blackboard(&self) -> &Blackboard {
        self.bb
    }
}

/// A node with no children. `tick` must not block: long-running work is
/// advanced a step per tick while returning Running.
pub trait Leaf<E>: Send {
    fn tick(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError>;

    /// Called once when the leaf is interrupted while Running.
    fn halt(&mut self, _ctx: &mut LeafContext<'_, E>) {}
}

/// Asynchronous action split into start / running / halted callbacks.
pub trait StatefulAction<E>: Send {
    fn on_start(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError>;
    fn on_running(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError>;
    fn on_halted(&mut self, ctx: &mut LeafContext<'_, E>);
}

/// Adapts a [`StatefulAction`] to the [`Leaf`] interface.
pub struct Stateful<A> {
    action: A,
    running: bool,
}

impl<A> Stateful<A> {
    pub fn new(action: A) -> Self {
        Self {
            action,
            running: false,
        }
    }

    pub fn inner(&self) -> &A {
        &self.action
    }
}

impl<E, A: StatefulAction<E>> Leaf<E> for Stateful<A> {
    fn tick(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> {
        let result = if self.running {
            self.action.on_running(ctx)
        } else {
            self.action.on_start(ctx)
        };
        self.running = matches!(result, Ok(NodeStatus::Running));
        if result == Ok(NodeStatus::Idle) {
            return Err(ctx.error("stateful action returned Idle"));
        }
        result
    }

    fn halt(&mut self, ctx: &mut LeafContext<'_, E>) {
        if self.running {
            self.running = false;
            self.action.on_halted(ctx);
        }
    }
}

type ConditionFn<E> = Box<dyn FnMut(&mut LeafContext<'_, E>) -> Result<bool, TickError> + Send>;
type ActionFn<E> = Box<dyn FnMut(&mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> + Send>;

/// Synchronous check: Success if the closure returns true, else Failure.
pub struct Condition<E> {
    check: ConditionFn<E>,
}

impl<E> Condition<E> {
    pub fn new(
        check: impl FnMut(&mut LeafContext<'_, E>) -> Result<bool, TickError> + Send + 'static,
    ) -> Self {
        Self {
            check: Box::new(check),
        }
    }
}

impl<E> Leaf<E> for Condition<E> {
    fn tick(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> {
        Ok(if (self.check)(ctx)? {
            NodeStatus::Success
        } else {
            NodeStatus::Failure
        })
    }
}

/// Synchronous action backed by a closure.
pub struct Action<E> {
    run: ActionFn<E>,
}

impl<E> Action<E> {
    pub fn new(
        run: impl FnMut(&mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> + Send + 'static,
    ) -> Self {
        Self { run: Box::new(run) }
    }
}

impl<E> Leaf<E> for Action<E> {
    fn tick(&mut self, ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> {
        (self.run)(ctx)
    }
}

pub struct Constant(pub NodeStatus);

impl<E> Leaf<E> for Constant {
    fn tick(&mut self, _ctx: &mut LeafContext<'_, E>) -> Result<NodeStatus, TickError> {
        Ok(self.0)
    }
}
