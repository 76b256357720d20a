//! XML reader and static checks for tree definitions.

use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document, Node};

use super::doc::{
    has_errors, Diagnostic, LeafKind, LeafModel, Location, NodeDef, PortDecl, PortDirection,
    TreeDef, TreeDocument,
};
use crate::bt::{PortValue, ValueType};

/// Tree ID given to a document whose top element is a bare node.
pub const DEFAULT_TREE_ID: &str = "MainTree";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Arity {
    AtLeastOne,
    One,
    Zero,
}

pub(crate) struct Builtin {
    pub name: &'static str,
    pub arity: Arity,
    pub ports: &'static [&'static str],
    pub required: &'static [&'static str],
}

pub(crate) const BUILTINS: &[Builtin] = &[
    Builtin { name: "Sequence", arity: Arity::AtLeastOne, ports: &[], required: &[] },
    Builtin { name: "ReactiveSequence", arity: Arity::AtLeastOne, ports: &[], required: &[] },
    Builtin { name: "Fallback", arity: Arity::AtLeastOne, ports: &[], required: &[] },
    Builtin { name: "ReactiveFallback", arity: Arity::AtLeastOne, ports: &[], required: &[] },
    Builtin {
        name: "RetryUntilSuccessful",
        arity: Arity::One,
        ports: &["num_attempts", "exempt_reasons", "attempt"],
        required: &["num_attempts"],
    },
    Builtin { name: "ForceFailure", arity: Arity::One, ports: &[], required: &[] },
    Builtin { name: "ForceSuccess", arity: Arity::One, ports: &[], required: &[] },
    Builtin { name: "Inverter", arity: Arity::One, ports: &[], required: &[] },
    Builtin { name: "SwitchStatement", arity: Arity::AtLeastOne, ports: &["variable"], required: &["variable"] },
    Builtin { name: "Case", arity: Arity::One, ports: &["value"], required: &["value"] },
    Builtin { name: "Default", arity: Arity::One, ports: &[], required: &[] },
    // remaps are free-form, see check_node
    Builtin { name: "SubTree", arity: Arity::Zero, ports: &["ID"], required: &["ID"] },
    Builtin { name: "AlwaysSuccess", arity: Arity::Zero, ports: &[], required: &[] },
    Builtin { name: "AlwaysFailure", arity: Arity::Zero, ports: &[], required: &[] },
];

pub(crate) fn builtin(kind: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == kind)
}

/// Parses a definition that declares its own leaf models.
pub fn parse_tree_definition(text: &str) -> Result<TreeDocument, Vec<Diagnostic>> {
    parse_with_models(text, &[])
}

/// Parses a definition, additionally accepting leaves described by
/// `models`. Models declared in the document take precedence.
pub fn parse_with_models(text: &str, models: &[LeafModel]) -> Result<TreeDocument, Vec<Diagnostic>> {
    let xml = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        vec![Diagnostic::error(
            Location { line: pos.row, col: pos.col },
            "xml",
            e.to_string(),
        )]
    })?;
    let mut reader = Reader { xml: &xml, diagnostics: Vec::new() };
    let mut doc = reader.document();
    for m in models {
        if doc.model(&m.id).is_none() {
            doc.models.push(m.clone());
        }
    }
    let mut diagnostics = reader.diagnostics;
    diagnostics.extend(check_document(&doc));
    if has_errors(&diagnostics) {
        Err(diagnostics)
    } else {
        Ok(doc)
    }
}

struct Reader<'a, 'input> {
    xml: &'a Document<'input>,
    diagnostics: Vec<Diagnostic>,
}

impl Reader<'_, '_> {
    fn loc(&self, node: Node) -> Location {
        let pos = self.xml.text_pos_at(node.range().start);
        Location { line: pos.row, col: pos.col }
    }

    fn error(&mut self, node: Node, rule: &'static str, message: impl Into<String>) {
        let loc = self.loc(node);
        self.diagnostics.push(Diagnostic::error(loc, rule, message));
    }

    /// Element children, flagging any stray text.
    fn elements<'n, 'i>(&mut self, node: Node<'n, 'i>) -> Vec<Node<'n, 'i>> {
        let mut out = Vec::new();
        for c in node.children() {
            if c.is_element() {
                out.push(c);
            } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
                self.error(c, "xml", "unexpected text content");
            }
        }
        out
    }

    fn document(&mut self) -> TreeDocument {
        let root = self.xml.root_element();
        let mut doc = TreeDocument {
            main_tree_id: String::new(),
            strategy_var: None,
            trees: Vec::new(),
            models: Vec::new(),
        };
        match root.tag_name().name() {
            "root" => {
                let mut main = None;
                for a in root.attributes() {
                    match a.name() {
                        "main_tree_to_execute" => main = Some(a.value().to_string()),
                        "strategy_var" => doc.strategy_var = Some(a.value().to_string()),
                        other => self.error(root, "unknown-port", format!("unknown attribute `{other}` on <root>")),
                    }
                }
                for el in self.elements(root) {
                    match el.tag_name().name() {
                        "BehaviorTree" => {
                            if let Some(t) = self.behavior_tree(el) {
                                doc.trees.push(t);
                            }
                        }
                        "TreeNodesModel" => self.models(el, &mut doc.models),
                        other => self.error(el, "unknown-node", format!("unexpected <{other}> under <root>")),
                    }
                }
                match main {
                    Some(id) => doc.main_tree_id = id,
                    None if doc.trees.len() == 1 => doc.main_tree_id = doc.trees[0].id.clone(),
                    None => self.error(root, "main-tree", "main_tree_to_execute is required when there is more than one tree"),
                }
            }
            "BehaviorTree" => {
                if let Some(t) = self.behavior_tree(root) {
                    doc.main_tree_id = t.id.clone();
                    doc.trees.push(t);
                }
            }
            _ => {
                doc.main_tree_id = DEFAULT_TREE_ID.to_string();
                doc.trees.push(TreeDef {
                    id: DEFAULT_TREE_ID.to_string(),
                    location: self.loc(root),
                    root: self.node(root),
                });
            }
        }
        doc
    }

    fn behavior_tree(&mut self, el: Node) -> Option<TreeDef> {
        let Some(id) = el.attribute("ID") else {
            self.error(el, "missing-port", "<BehaviorTree> requires an ID");
            return None;
        };
        let body = self.elements(el);
        if body.len() != 1 {
            self.error(el, "arity", format!("tree `{id}` must have exactly 1 root node, found {}", body.len()));
            return None;
        }
        Some(TreeDef {
            id: id.to_string(),
            location: self.loc(el),
            root: self.node(body[0]),
        })
    }

    fn node(&mut self, el: Node) -> NodeDef {
        let mut def = NodeDef::new(el.tag_name().name());
        def.location = self.loc(el);
        def.attrs = el
            .attributes()
            .map(|a| (a.name().to_string(), a.value().to_string()))
            .collect();
        for c in self.elements(el) {
            def.children.push(self.node(c));
        }
        def
    }

    fn models(&mut self, el: Node, out: &mut Vec<LeafModel>) {
        for m in self.elements(el) {
            let kind = match m.tag_name().name() {
                "Action" => LeafKind::Action,
                "Condition" => LeafKind::Condition,
                other => {
                    self.error(m, "unknown-node", format!("unexpected <{other}> in models"));
                    continue;
                }
            };
            let Some(id) = m.attribute("ID") else {
                self.error(m, "missing-port", "leaf model requires an ID");
                continue;
            };
            let mut model = LeafModel { kind, id: id.to_string(), ports: Vec::new() };
            for p in self.elements(m) {
                let direction = match p.tag_name().name() {
                    "input_port" => PortDirection::Input,
                    "output_port" => PortDirection::Output,
                    other => {
                        self.error(p, "unknown-node", format!("unexpected <{other}> in model `{id}`"));
                        continue;
                    }
                };
                let Some(name) = p.attribute("name") else {
                    self.error(p, "missing-port", format!("port of model `{id}` requires a name"));
                    continue;
                };
                let ty_name = p.attribute("type").unwrap_or("text");
                let Some(ty) = ValueType::from_name(ty_name) else {
                    self.error(p, "port-type", format!("unknown port type `{ty_name}`"));
                    continue;
                };
                if model.port(name).is_some() {
                    self.error(p, "duplicate-id", format!("port `{name}` declared twice in model `{id}`"));
                    continue;
                }
                model.ports.push(PortDecl { name: name.to_string(), direction, ty });
            }
            if out.iter().any(|o| o.id == model.id) || builtin(&model.id).is_some() {
                self.error(m, "duplicate-id", format!("leaf model `{id}` is already defined"));
                continue;
            }
            out.push(model);
        }
    }
}

/// Semantic checks over a document: node kinds, ports, arity, tree
/// references and the main tree.
pub fn check_document(doc: &TreeDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for t in &doc.trees {
        if !seen.insert(t.id.as_str()) {
            out.push(Diagnostic::error(t.location, "duplicate-id", format!("tree `{}` is defined twice", t.id)));
        }
    }
    if doc.main_tree().is_none() && !doc.main_tree_id.is_empty() {
        let loc = doc.trees.first().map(|t| t.location).unwrap_or(Location { line: 1, col: 1 });
        out.push(Diagnostic::error(loc, "main-tree", format!("main tree `{}` is not defined", doc.main_tree_id)));
    } else if doc.trees.is_empty() {
        out.push(Diagnostic::error(Location { line: 1, col: 1 }, "main-tree", "document defines no trees"));
    }
    for t in &doc.trees {
        check_node(doc, &t.root, None, &mut out);
    }
    check_cycles(doc, &mut out);
    out
}

fn check_node(doc: &TreeDocument, node: &NodeDef, parent: Option<&str>, out: &mut Vec<Diagnostic>) {
    let loc = node.location;
    let kind = node.kind.as_str();
    let arity = if let Some(b) = builtin(kind) {
        for (name, _) in &node.attrs {
            if name != "name" && !b.ports.contains(&name.as_str()) && kind != "SubTree" {
                out.push(Diagnostic::error(loc, "unknown-port", format!("<{kind}> has no port `{name}`")));
            }
        }
        for req in b.required {
            if node.get(req).is_none() {
                out.push(Diagnostic::error(loc, "missing-port", format!("<{kind}> requires `{req}`")));
            }
        }
        match kind {
            "Case" | "Default" if parent != Some("SwitchStatement") => {
                out.push(Diagnostic::error(loc, "misplaced-case", format!("<{kind}> is only valid inside <SwitchStatement>")));
            }
            "SwitchStatement" => check_switch(node, out),
            "RetryUntilSuccessful" => {
                if let Some(raw) = node.get("num_attempts") {
                    let literal = matches!(PortValue::parse(raw), PortValue::Literal(_));
                    if literal && !raw.trim().parse::<u32>().is_ok_and(|n| n >= 1) {
                        out.push(Diagnostic::error(loc, "port-type", format!("num_attempts `{raw}` is not a positive integer")));
                    }
                }
                if let Some(PortValue::Literal(_)) = node.get("attempt").map(PortValue::parse) {
                    out.push(Diagnostic::error(loc, "port-binding", "output port `attempt` must be a {key}"));
                }
            }
            "SubTree" => {
                for (name, _) in &node.attrs {
                    if name.starts_with('_') || name.is_empty() {
                        out.push(Diagnostic::error(loc, "unknown-port", format!("invalid remap name `{name}`")));
                    }
                }
                if let Some(id) = node.get("ID") {
                    if doc.tree(id).is_none() {
                        out.push(Diagnostic::error(loc, "subtree-unresolved", format!("subtree `{id}` is not defined")));
                    }
                }
            }
            _ => {}
        }
        b.arity
    } else if let Some(model) = doc.model(kind) {
        for (name, raw) in &node.attrs {
            if name == "name" {
                continue;
            }
            let Some(port) = model.port(name) else {
                out.push(Diagnostic::error(loc, "unknown-port", format!("leaf `{kind}` has no port `{name}`")));
                continue;
            };
            match (PortValue::parse(raw), port.direction) {
                (PortValue::Literal(_), PortDirection::Output) => out.push(Diagnostic::error(
                    loc,
                    "port-binding",
                    format!("output port `{name}` of `{kind}` must be a {{key}}"),
                )),
                (PortValue::Literal(_), PortDirection::Input) if port.ty.parse_literal(raw).is_none() => {
                    out.push(Diagnostic::error(
                        loc,
                        "port-type",
                        format!("port `{name}` of `{kind}` expects {}, got `{raw}`", port.ty),
                    ))
                }
                _ => {}
            }
        }
        Arity::Zero
    } else {
        out.push(Diagnostic::error(loc, "unknown-node", format!("unknown node kind `{kind}`")));
        return;
    };
    let n = node.children.len();
    let problem = match arity {
        Arity::AtLeastOne if n == 0 => Some(if kind == "SwitchStatement" {
            "switch requires ≥1 case".to_string()
        } else {
            "composite requires ≥1 child".to_string()
        }),
        Arity::One if n != 1 => Some(format!("decorator requires exactly 1 child, found {n}")),
        Arity::Zero if n != 0 => Some(format!("leaf must not have children, found {n}")),
        _ => None,
    };
    if let Some(p) = problem {
        out.push(Diagnostic::error(loc, "arity", format!("<{kind}>: {p}")));
    }
    for c in &node.children {
        check_node(doc, c, Some(kind), out);
    }
}

fn check_switch(node: &NodeDef, out: &mut Vec<Diagnostic>) {
    let mut values = BTreeSet::new();
    let mut defaults = 0;
    for c in &node.children {
        match c.kind.as_str() {
            "Case" => {
                if let Some(v) = c.get("value") {
                    if !values.insert(v) {
                        out.push(Diagnostic::error(c.location, "duplicate-case", format!("case `{v}` appears twice")));
                    }
                }
            }
            "Default" => {
                defaults += 1;
                if defaults > 1 {
                    out.push(Diagnostic::error(c.location, "duplicate-case", "more than one <Default>"));
                }
            }
            other => out.push(Diagnostic::error(
                c.location,
                "arity",
                format!("<SwitchStatement> children must be <Case> or <Default>, found <{other}>"),
            )),
        }
    }
}

fn check_cycles(doc: &TreeDocument, out: &mut Vec<Diagnostic>) {
    let mut edges: BTreeMap<&str, Vec<(&str, Location)>> = BTreeMap::new();
    for t in &doc.trees {
        let refs = edges.entry(t.id.as_str()).or_default();
        t.root.walk(&mut |n| {
            if n.kind == "SubTree" {
                if let Some(id) = n.get("ID") {
                    refs.push((id, n.location));
                }
            }
        });
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        edges: &BTreeMap<&'a str, Vec<(&'a str, Location)>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
        out: &mut Vec<Diagnostic>,
    ) {
        marks.insert(id, Mark::Active);
        path.push(id);
        for &(next, loc) in edges.get(id).map(Vec::as_slice).unwrap_or(&[]) {
            match marks.get(next) {
                Some(Mark::Active) => {
                    let start = path.iter().position(|p| *p == next).unwrap_or(0);
                    let mut cycle: Vec<&str> = path[start..].to_vec();
                    cycle.push(next);
                    out.push(Diagnostic::error(loc, "subtree-cycle", format!("subtree cycle {}", cycle.join(" -> "))));
                }
                Some(Mark::Done) => {}
                None if edges.contains_key(next) => visit(next, edges, marks, path, out),
                None => {}
            }
        }
        path.pop();
        marks.insert(id, Mark::Done);
    }
    let mut marks = BTreeMap::new();
    let ids: Vec<&str> = edges.keys().copied().collect();
    for id in ids {
        if !marks.contains_key(id) {
            visit(id, &edges, &mut marks, &mut Vec::new(), out);
        }
    }
}
