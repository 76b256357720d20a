//! Typed, scoped key-value store shared by the nodes of a tree.
//!
//! Scopes live in an arena owned by [`Blackboard`]. A scope created for a
//! subtree only sees its own entries plus the keys it explicitly remaps to
//! its parent; there is no implicit fall-through.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Reserved key carrying the reason code of the most recent failure.
pub const FAILURE_REASON_KEY: &str = "last_failure_reason";

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Bool,
    Int,
    Real,
    Text,
}

impl ValueType {
    pub fn name(self) -> &'static str {
        match self {
            ValueType::Bool => "bool",
            ValueType::Int => "int",
            ValueType::Real => "real",
            ValueType::Text => "text",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "bool" => Some(ValueType::Bool),
            "int" => Some(ValueType::Int),
            "real" => Some(ValueType::Real),
            "text" => Some(ValueType::Text),
            _ => None,
        }
    }

    /// Parses a literal attribute value into a value of this type.
    pub fn parse_literal(self, text: &str) -> Option<Value> {
        match self {
            ValueType::Bool => match text {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            ValueType::Int => text.trim().parse().ok().map(Value::Int),
            ValueType::Real => text.trim().parse().ok().map(Value::Real),
            ValueType::Text => Some(Value::Text(text.to_string())),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Real(_) => ValueType::Real,
            Value::Text(_) => ValueType::Text,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(t) => f.write_str(t),
        }
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Conversion out of a blackboard [`Value`].
///
/// Text converts to the numeric and boolean types by parsing, so literals
/// passed through subtree boundaries (which are untyped) still read back as
/// numbers. Integers widen to reals.
pub trait FromValue: Sized {
    const TYPE: ValueType;
    fn from_value(value: &Value) -> Option<Self>;
}

impl FromValue for bool {
    const TYPE: ValueType = ValueType::Bool;
    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Bool(b) => Some(*b),
            Value::Text(t) => t.parse().ok(),
            _ => None,
        }
    }
}

impl FromValue for i64 {
    const TYPE: ValueType = ValueType::Int;
    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Int(i) => Some(*i),
            Value::Text(t) => t.trim().parse().ok(),
            _ => None,
        }
    }
}

impl FromValue for f64 {
    const TYPE: ValueType = ValueType::Real;
    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Real(r) => Some(*r),
            Value::Int(i) => Some(*i as f64),
            Value::Text(t) => t.trim().parse().ok(),
            _ => None,
        }
    }
}

impl FromValue for String {
    const TYPE: ValueType = ValueType::Text;
    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Text(t) => Some(t.clone()),
            other => Some(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlackboardError {
    #[error("blackboard key `{0}` is not bound")]
    Unbound(String),
    #[error("blackboard key `{key}` holds {found}, expected {expected}")]
    TypeMismatch {
        key: String,
        expected: ValueType,
        found: ValueType,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScopeId(usize);

impl ScopeId {
    pub const ROOT: ScopeId = ScopeId(0);
}

#[derive(Debug, Clone, Default)]
struct Scope {
    entries: BTreeMap<String, Value>,
    parent: Option<ScopeId>,
    remaps: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct Blackboard {
    scopes: Vec<Scope>,
}

impl Default for Blackboard {
    fn default() -> Self {
        Self::new()
    }
}

impl Blackboard {
    pub fn new() -> Self {
        Self {
            scopes: vec![Scope::default()],
        }
    }

    /// Creates a scope whose `remaps` keys (local name → parent name)
    /// resolve through `parent`.
    pub fn child_scope(
        &mut self,
        parent: ScopeId,
        remaps: impl IntoIterator<Item = (String, String)>,
    ) -> ScopeId {
        let id = ScopeId(self.scopes.len());
        self.scopes.push(Scope {
            entries: BTreeMap::new(),
            parent: Some(parent),
            remaps: remaps.into_iter().collect(),
        });
        id
    }

    pub fn scope_count(&self) -> usize {
        self.scopes.len()
    }

    /// Follows remaps up to the scope that physically owns `key`.
    fn resolve(&self, mut scope: ScopeId, key: &str) -> (ScopeId, String) {
        let mut key = key.to_string();
        loop {
            let s = &self.scopes[scope.0];
            match (s.remaps.get(&key), s.parent) {
                (Some(outer), Some(parent)) => {
                    key = outer.clone();
                    scope = parent;
                }
                _ => return (scope, key),
            }
        }
    }

    pub fn get(&self, scope: ScopeId, key: &str) -> Result<&Value, BlackboardError> {
        let (owner, key) = self.resolve(scope, key);
        self.scopes[owner.0]
            .entries
            .get(&key)
            .ok_or(BlackboardError::Unbound(key))
    }

    pub fn get_as<T: FromValue>(&self, scope: ScopeId, key: &str) -> Result<T, BlackboardError> {
        let value = self.get(scope, key)?;
        T::from_value(value).ok_or_else(|| BlackboardError::TypeMismatch {
            key: key.to_string(),
            expected: T::TYPE,
            found: value.value_type(),
        })
    }

    pub fn contains(&self, scope: ScopeId, key: &str) -> bool {
        self.get(scope, key).is_ok()
    }

    /// Writes `value`, through remaps if `key` is remapped in `scope`.
    ///
    /// An entry keeps the type of its first write; text values are exempt
    /// since they are how untyped literals enter a scope.
    pub fn set(
        &mut self,
        scope: ScopeId,
        key: &str,
        value: impl Into<Value>,
    ) -> Result<(), BlackboardError> {
        let value = value.into();
        let (owner, key) = self.resolve(scope, key);
        let entries = &mut self.scopes[owner.0].entries;
        if let Some(old) = entries.get(&key) {
            let (old_ty, new_ty) = (old.value_type(), value.value_type());
            let compatible = old_ty == new_ty
                || old_ty == ValueType::Text
                || (old_ty == ValueType::Real && new_ty == ValueType::Int);
            if !compatible {
                return Err(BlackboardError::TypeMismatch {
                    key,
                    expected: old_ty,
                    found: new_ty,
                });
            }
        }
        entries.insert(key, value);
        Ok(())
    }

    pub fn remove(&mut self, scope: ScopeId, key: &str) -> Option<Value> {
        let (owner, key) = self.resolve(scope, key);
        self.scopes[owner.0].entries.remove(&key)
    }

    pub fn failure_reason(&self) -> Option<&str> {
        match self.get(ScopeId::ROOT, FAILURE_REASON_KEY) {
            Ok(Value::Text(t)) => Some(t),
            _ => None,
        }
    }

    pub fn set_failure_reason(&mut self, reason: &str) {
        self.scopes[0]
            .entries
            .insert(FAILURE_REASON_KEY.to_string(), Value::Text(reason.to_string()));
    }

    pub fn clear_failure_reason(&mut self) {
        self.scopes[0].entries.remove(FAILURE_REASON_KEY);
    }
}

/// How a node port is connected: a constant or a blackboard key.
#[derive(Debug, Clone, PartialEq)]
pub enum PortValue {
    Literal(Value),
    Key(String),
}

impl PortValue {
    /// `{key}` denotes a blackboard binding; anything else is a literal.
    pub fn parse(raw: &str) -> PortValue {
        match raw.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            Some(key) if !key.is_empty() => PortValue::Key(key.to_string()),
            _ => PortValue::Literal(Value::Text(raw.to_string())),
        }
    }
}

pub type Ports = BTreeMap<String, PortValue>;
