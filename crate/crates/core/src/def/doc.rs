//! In-memory form of a tree definition file.

use std::fmt;

use crate::bt::ValueType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Location {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    pub rule: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: Location, rule: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            location,
            rule,
            message: message.into(),
        }
    }

    pub fn warning(location: Location, rule: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(location, rule, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `severity:line:col:rule:message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.severity, self.location.line, self.location.col, self.rule, self.message
        )
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

/// One element of a tree body. Attributes keep their source order.
#[derive(Debug, Clone)]
pub struct NodeDef {
    pub kind: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<NodeDef>,
    pub location: Location,
}

impl NodeDef {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            attrs: Vec::new(),
            children: Vec::new(),
            location: Location::default(),
        }
    }

    pub fn attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((name.into(), value.into()));
        self
    }

    pub fn child(mut self, child: NodeDef) -> Self {
        self.children.push(child);
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    /// The `name` attribute, else the subtree ID, else the element name.
    pub fn display_name(&self) -> &str {
        self.get("name")
            .or_else(|| (self.kind == "SubTree").then(|| self.get("ID")).flatten())
            .unwrap_or(&self.kind)
    }

    /// Equality ignoring source locations.
    pub fn same_structure(&self, other: &NodeDef) -> bool {
        self.kind == other.kind
            && self.attrs == other.attrs
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_structure(b))
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a NodeDef)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeDef {
    pub id: String,
    pub root: NodeDef,
    pub location: Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Action,
    Condition,
}

impl LeafKind {
    pub fn element(self) -> &'static str {
        match self {
            LeafKind::Action => "Action",
            LeafKind::Condition => "Condition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortDirection {
    Input,
    Output,
}

impl PortDirection {
    pub fn element(self) -> &'static str {
        match self {
            PortDirection::Input => "input_port",
            PortDirection::Output => "output_port",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub direction: PortDirection,
    pub ty: ValueType,
}

/// Port signature of a leaf kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafModel {
    pub kind: LeafKind,
    pub id: String,
    pub ports: Vec<PortDecl>,
}

impl LeafModel {
    pub fn action(id: impl Into<String>) -> Self {
        Self {
            kind: LeafKind::Action,
            id: id.into(),
            ports: Vec::new(),
        }
    }

    pub fn condition(id: impl Into<String>) -> Self {
        Self {
            kind: LeafKind::Condition,
            ..Self::action(id)
        }
    }

    pub fn input(mut self, name: impl Into<String>, ty: ValueType) -> Self {
        self.ports.push(PortDecl {
            name: name.into(),
            direction: PortDirection::Input,
            ty,
        });
        self
    }

    pub fn output(mut self, name: impl Into<String>, ty: ValueType) -> Self {
        self.ports.push(PortDecl {
            name: name.into(),
            direction: PortDirection::Output,
            ty,
        });
        self
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct TreeDocument {
    pub main_tree_id: String,
    /// Blackboard key that strategy-selector switches dispatch on.
    pub strategy_var: Option<String>,
    pub trees: Vec<TreeDef>,
    pub models: Vec<LeafModel>,
}

impl TreeDocument {
    pub fn tree(&self, id: &str) -> Option<&TreeDef> {
        self.trees.iter().find(|t| t.id == id)
    }

    pub fn main_tree(&self) -> Option<&TreeDef> {
        self.tree(&self.main_tree_id)
    }

    pub fn model(&self, id: &str) -> Option<&LeafModel> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn same_structure(&self, other: &TreeDocument) -> bool {
        self.main_tree_id == other.main_tree_id
            && self.strategy_var == other.strategy_var
            && self.models == other.models
            && self.trees.len() == other.trees.len()
            && self
                .trees
                .iter()
                .zip(&other.trees)
                .all(|(a, b)| a.id == b.id && a.root.same_structure(&b.root))
    }
}
