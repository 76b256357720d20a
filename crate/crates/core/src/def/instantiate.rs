//! Turns a checked document into an executable tree.

use std::collections::BTreeMap;

use thiserror::Error;

use super::doc::{has_errors, Diagnostic, LeafModel, Location, NodeDef, PortDirection, TreeDocument};
use super::parse::check_document;
use crate::bt::{
    exempt_reasons, Blackboard, CaseLabel, Constant, Leaf, NodeStatus, PortValue, Ports, RetrySpec,
    ScopeId, StructureError, Tree, TreeNode, Value, ValueType,
};

/// What a factory gets to build one leaf instance.
pub struct LeafConfig<'a> {
    pub id: &'a str,
    pub name: &'a str,
    pub ports: &'a Ports,
}

pub type LeafFactory<E> = Box<dyn Fn(&LeafConfig<'_>) -> Box<dyn Leaf<E>> + Send + Sync>;

/// Leaf kinds a document may use, with their port signatures.
pub struct LeafRegistry<E> {
    entries: BTreeMap<String, (LeafModel, LeafFactory<E>)>,
}

impl<E> Default for LeafRegistry<E> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<E> LeafRegistry<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        model: LeafModel,
        factory: impl Fn(&LeafConfig<'_>) -> Box<dyn Leaf<E>> + Send + Sync + 'static,
    ) -> &mut Self {
        self.entries.insert(model.id.clone(), (model, Box::new(factory)));
        self
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn model(&self, id: &str) -> Option<&LeafModel> {
        self.entries.get(id).map(|(m, _)| m)
    }

    pub fn models(&self) -> Vec<LeafModel> {
        self.entries.values().map(|(m, _)| m.clone()).collect()
    }
}

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("document has errors:\n{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("{location}: leaf `{leaf}` is not registered")]
    UnregisteredLeaf { leaf: String, location: Location },
    #[error("{location}: port `{port}` of `{node}` expects {expected}, got {found}")]
    PortType {
        node: String,
        port: String,
        expected: ValueType,
        found: String,
        location: Location,
    },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Builds the main tree of `doc`, creating child scopes on `bb` for every
/// SubTree boundary.
pub fn instantiate<E>(
    doc: &TreeDocument,
    registry: &LeafRegistry<E>,
    bb: &mut Blackboard,
) -> Result<TreeNode<E>, InstantiateError> {
    let diagnostics = check_document(doc);
    if has_errors(&diagnostics) {
        return Err(InstantiateError::Invalid(diagnostics));
    }
    let main = doc.main_tree().expect("checked above");
    Builder { doc, registry, bb }.build(&main.root, ScopeId::ROOT)
}

/// [`instantiate`] followed by wrapping the result in a [`Tree`].
pub fn build_tree<E>(
    doc: &TreeDocument,
    registry: &LeafRegistry<E>,
    mut bb: Blackboard,
) -> Result<Tree<E>, InstantiateError> {
    let root = instantiate(doc, registry, &mut bb)?;
    Ok(Tree::new(root, bb)?)
}

struct Builder<'a, E> {
    doc: &'a TreeDocument,
    registry: &'a LeafRegistry<E>,
    bb: &'a mut Blackboard,
}

impl<E> Builder<'_, E> {
    fn build(&mut self, node: &NodeDef, scope: ScopeId) -> Result<TreeNode<E>, InstantiateError> {
        let name = node.display_name().to_string();
        let built = match node.kind.as_str() {
            "Sequence" => TreeNode::sequence(name, self.children(node, scope)?),
            "ReactiveSequence" => TreeNode::reactive_sequence(name, self.children(node, scope)?),
            "Fallback" => TreeNode::fallback(name, self.children(node, scope)?),
            "ReactiveFallback" => TreeNode::reactive_fallback(name, self.children(node, scope)?),
            "ForceFailure" => TreeNode::force_failure(name, self.only_child(node, scope)?),
            "ForceSuccess" => TreeNode::force_success(name, self.only_child(node, scope)?),
            "Inverter" => TreeNode::inverter(name, self.only_child(node, scope)?),
            "AlwaysSuccess" => TreeNode::leaf(name, Constant(NodeStatus::Success)),
            "AlwaysFailure" => TreeNode::leaf(name, Constant(NodeStatus::Failure)),
            "RetryUntilSuccessful" => {
                let raw = node.get("num_attempts").unwrap_or_default();
                let num_attempts = match PortValue::parse(raw) {
                    PortValue::Literal(_) => PortValue::Literal(
                        ValueType::Int.parse_literal(raw).expect("checked by check_document"),
                    ),
                    key => key,
                };
                let mut spec = RetrySpec {
                    num_attempts,
                    exemption: None,
                    attempt_key: None,
                };
                if let Some(list) = node.get("exempt_reasons") {
                    let reasons: Vec<&str> = list
                        .split([',', ';'])
                        .map(str::trim)
                        .filter(|r| !r.is_empty())
                        .collect();
                    if !reasons.is_empty() {
                        spec = spec.with_exemption(exempt_reasons(reasons));
                    }
                }
                if let Some(PortValue::Key(key)) = node.get("attempt").map(PortValue::parse) {
                    spec = spec.with_attempt_key(key);
                }
                TreeNode::retry(name, spec, self.only_child(node, scope)?)
            }
            "SwitchStatement" => {
                let variable = PortValue::parse(node.get("variable").unwrap_or_default());
                let mut cases = Vec::new();
                for c in &node.children {
                    let label = match c.get("value") {
                        Some(v) if c.kind == "Case" => CaseLabel::Value(v.to_string()),
                        _ => CaseLabel::Default,
                    };
                    cases.push((label, self.only_child(c, scope)?));
                }
                TreeNode::switch(name, variable, cases)
            }
            "SubTree" => {
                let id = node.get("ID").unwrap_or_default();
                let mut remaps = Vec::new();
                let mut literals = Vec::new();
                for (k, v) in &node.attrs {
                    if k == "ID" || k == "name" {
                        continue;
                    }
                    match PortValue::parse(v) {
                        PortValue::Key(outer) => remaps.push((k.clone(), outer)),
                        PortValue::Literal(value) => literals.push((k.clone(), value)),
                    }
                }
                let inner = self.bb.child_scope(scope, remaps);
                for (k, value) in literals {
                    self.bb
                        .set(inner, &k, value)
                        .expect("fresh scope accepts any literal");
                }
                let tree = self.doc.tree(id).expect("checked by check_document");
                let child = self.build(&tree.root, inner)?;
                TreeNode::subtree(name, id, child)
            }
            kind => self.leaf(node, kind, name, scope)?,
        };
        Ok(built.in_scope(scope))
    }

    fn children(&mut self, node: &NodeDef, scope: ScopeId) -> Result<Vec<TreeNode<E>>, InstantiateError> {
        node.children.iter().map(|c| self.build(c, scope)).collect()
    }

    fn only_child(&mut self, node: &NodeDef, scope: ScopeId) -> Result<TreeNode<E>, InstantiateError> {
        self.build(&node.children[0], scope)
    }

    fn leaf(&mut self, node: &NodeDef, kind: &str, name: String, scope: ScopeId) -> Result<TreeNode<E>, InstantiateError> {
        let Some((model, factory)) = self.registry.entries.get(kind) else {
            return Err(InstantiateError::UnregisteredLeaf {
                leaf: kind.to_string(),
                location: node.location,
            });
        };
        let declared = self.doc.model(kind);
        let mut ports = Ports::new();
        for (port, raw) in &node.attrs {
            if port == "name" {
                continue;
            }
            let decl = model.port(port).or_else(|| declared.and_then(|d| d.port(port)));
            let mismatch = |expected: ValueType, found: String| InstantiateError::PortType {
                node: name.clone(),
                port: port.clone(),
                expected,
                found,
                location: node.location,
            };
            let Some(decl) = decl else {
                return Err(InstantiateError::Invalid(vec![Diagnostic::error(
                    node.location,
                    "unknown-port",
                    format!("leaf `{kind}` has no port `{port}`"),
                )]));
            };
            if let Some(other) = declared.and_then(|d| d.port(port)) {
                if other.ty != decl.ty {
                    return Err(mismatch(decl.ty, format!("a {} declaration", other.ty)));
                }
            }
            let value = match PortValue::parse(raw) {
                PortValue::Literal(_) => PortValue::Literal(
                    decl.ty
                        .parse_literal(raw)
                        .ok_or_else(|| mismatch(decl.ty, format!("`{raw}`")))?,
                ),
                PortValue::Key(key) => {
                    if decl.direction == PortDirection::Input {
                        if let Ok(existing) = self.bb.get(scope, &key) {
                            if !compatible(existing, decl.ty) {
                                return Err(mismatch(
                                    decl.ty,
                                    format!("{} at key `{key}`", existing.value_type()),
                                ));
                            }
                        }
                    }
                    PortValue::Key(key)
                }
            };
            ports.insert(port.clone(), value);
        }
        let leaf = factory(&super::LeafConfig {
            id: kind,
            name: &name,
            ports: &ports,
        });
        Ok(TreeNode::leaf_with_ports(name, leaf, ports))
    }
}

fn compatible(value: &Value, ty: ValueType) -> bool {
    let found = value.value_type();
    found == ty || found == ValueType::Text || (found == ValueType::Int && ty == ValueType::Real)
}
