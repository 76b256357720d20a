//! Serializer producing the same dialect the reader accepts.

use std::fmt::Write;

use super::doc::{NodeDef, TreeDocument};

fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

fn node(out: &mut String, n: &NodeDef, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = write!(out, "{pad}<{}", n.kind);
    for (k, v) in &n.attrs {
        let _ = write!(out, " {k}=\"{}\"", escape(v));
    }
    if n.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for c in &n.children {
        node(out, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}</{}>", n.kind);
}

pub fn to_xml(doc: &TreeDocument) -> String {
    let mut out = String::new();
    let _ = write!(out, "<root main_tree_to_execute=\"{}\"", escape(&doc.main_tree_id));
    if let Some(var) = &doc.strategy_var {
        let _ = write!(out, " strategy_var=\"{}\"", escape(var));
    }
    out.push_str(">\n");
    for t in &doc.trees {
        let _ = writeln!(out, "  <BehaviorTree ID=\"{}\">", escape(&t.id));
        node(&mut out, &t.root, 2);
        out.push_str("  </BehaviorTree>\n");
    }
    if !doc.models.is_empty() {
        out.push_str("  <TreeNodesModel>\n");
        for m in &doc.models {
            let el = m.kind.element();
            if m.ports.is_empty() {
                let _ = writeln!(out, "    <{el} ID=\"{}\"/>", escape(&m.id));
                continue;
            }
            let _ = writeln!(out, "    <{el} ID=\"{}\">", escape(&m.id));
            for p in &m.ports {
                let _ = writeln!(
                    out,
                    "      <{} name=\"{}\" type=\"{}\"/>",
                    p.direction.element(),
                    escape(&p.name),
                    p.ty
                );
            }
            let _ = writeln!(out, "    </{el}>");
        }
        out.push_str("  </TreeNodesModel>\n");
    }
    out.push_str("</root>\n");
    out
}
