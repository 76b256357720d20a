//! The canonical adaptive valve tree, generated for a behavior.

use crate::adaptive::{StrategyRegistry, EXEMPT_REASONS, NO_STRATEGIES};
use crate::def::{
    has_errors, parse_with_models, to_xml, validate_switch_coverage, Diagnostic, NodeDef, TreeDef,
    TreeDocument,
};
use crate::sim::leaf_models;

use super::config::Behavior;

pub const MAIN_TREE: &str = "AdaptiveTask";
pub const STRATEGY_TREE: &str = "StrategyAttempt";
pub const MANIPULATE_TREE: &str = "Manipulate";
pub const STRATEGY_VAR: &str = "strategy_id";

fn tree(id: &str, root: NodeDef) -> TreeDef {
    TreeDef {
        id: id.to_string(),
        root,
        location: Default::default(),
    }
}

fn main_tree(ids: &[String]) -> NodeDef {
    let mut switch = NodeDef::new("SwitchStatement")
        .attr("name", "StrategySwitchStatement")
        .attr("variable", format!("{{{STRATEGY_VAR}}}"));
    for id in ids {
        switch = switch.child(
            NodeDef::new("Case").attr("value", id).child(
                NodeDef::new("SubTree")
                    .attr("ID", STRATEGY_TREE)
                    .attr("name", id)
                    .attr("strategy", id)
                    .attr("target", "{target}")
                    .attr("progress", "{progress}")
                    .attr("attempt", "{attempt}"),
            ),
        );
    }
    switch = switch.child(
        NodeDef::new("Case")
            .attr("value", NO_STRATEGIES)
            .child(NodeDef::new("AlwaysSuccess").attr("name", NO_STRATEGIES)),
    );
    NodeDef::new("Sequence").attr("name", "adaptive_behavior").child(
        NodeDef::new("RetryUntilSuccessful")
            .attr("name", "attempts")
            .attr("num_attempts", "{num_attempts}")
            .attr("exempt_reasons", EXEMPT_REASONS.join(","))
            .attr("attempt", "{attempt}")
            .child(
                NodeDef::new("Sequence")
                    .attr("name", "select_and_execute")
                    .child(
                        NodeDef::new("SelectStrategy")
                            .attr("strategies", ids.join(","))
                            .attr("strategy_id", format!("{{{STRATEGY_VAR}}}")),
                    )
                    .child(switch),
            ),
    )
    .child(NodeDef::new("CheckStrategyViable").attr("strategy_id", format!("{{{STRATEGY_VAR}}}")))
}

fn strategy_tree() -> NodeDef {
    let strategy = || ("strategy", "{strategy}");
    let node = |kind: &str| {
        let (k, v) = strategy();
        NodeDef::new(kind).attr(k, v)
    };
    NodeDef::new("Sequence")
        .attr("name", "strategy_attempt")
        .child(node("LookupPose").attr("reference", "{grasp_reference}"))
        .child(node("Approach"))
        .child(node("Grasp").attr("reference", "{grasp_reference}"))
        .child(
            NodeDef::new("SubTree")
                .attr("ID", MANIPULATE_TREE)
                .attr("strategy", "{strategy}")
                .attr("target", "{target}")
                .attr("progress", "{progress}")
                .attr("attempt", "{attempt}"),
        )
}

fn manipulate_tree() -> NodeDef {
    let node = |kind: &str| NodeDef::new(kind).attr("strategy", "{strategy}");
    NodeDef::new("Fallback")
        .attr("name", "manipulate_or_retract")
        .child(
            NodeDef::new("Sequence")
                .attr("name", "manipulate_then_retract")
                .child(
                    NodeDef::new("ReactiveFallback")
                        .attr("name", "until_done")
                        .child(NodeDef::new("IsTightened"))
                        .child(
                            NodeDef::new("ReactiveSequence")
                                .attr("name", "smart_twist")
                                .child(node("AngleWithinLimits"))
                                .child(node("FTWithinLimits"))
                                .child(
                                    node("ManipulateTarget")
                                        .attr("target", "{target}")
                                        .attr("progress", "{progress}")
                                        .attr("attempt", "{attempt}"),
                                ),
                        ),
                )
                .child(node("Retract")),
        )
        .child(NodeDef::new("ForceFailure").attr("name", "retract_on_failure").child(node("Retract")))
}

/// The tree as XML text, before any checking.
pub fn canonical_xml(registry: &StrategyRegistry, behavior: Behavior) -> String {
    let ids = behavior.strategy_ids(registry);
    let doc = TreeDocument {
        main_tree_id: MAIN_TREE.to_string(),
        strategy_var: Some(STRATEGY_VAR.to_string()),
        trees: vec![
            tree(MAIN_TREE, main_tree(&ids)),
            tree(STRATEGY_TREE, strategy_tree()),
            tree(MANIPULATE_TREE, manipulate_tree()),
        ],
        models: leaf_models(),
    };
    to_xml(&doc)
}

/// Builds and checks the canonical tree. `Err` carries every diagnostic
/// when any of them is an error.
pub fn build_canonical_tree(
    registry: &StrategyRegistry,
    behavior: Behavior,
) -> Result<TreeDocument, Vec<Diagnostic>> {
    let ids = behavior.strategy_ids(registry);
    if let Some(missing) = ids.iter().find(|id| registry.get(id).is_none()) {
        return Err(vec![Diagnostic::error(
            Default::default(),
            "unknown-strategy",
            format!("behavior `{behavior}` needs strategy `{missing}`, which is not configured"),
        )]);
    }
    let doc = parse_with_models(&canonical_xml(registry, behavior), &[])?;
    let diagnostics = validate_switch_coverage(&doc, &ids);
    if has_errors(&diagnostics) {
        return Err(diagnostics);
    }
    Ok(doc)
}

/// Strategy IDs named by the literal `strategies` port of every
/// SelectStrategy in `doc`, in first-seen order.
pub fn declared_strategy_ids(doc: &TreeDocument) -> Option<Vec<String>> {
    let mut ids: Vec<String> = Vec::new();
    let mut found = false;
    for t in &doc.trees {
        t.root.walk(&mut |n| {
            if n.kind != "SelectStrategy" {
                return;
            }
            if let Some(list) = n.get("strategies").filter(|l| !l.starts_with('{')) {
                found = true;
                for id in list.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
                    if !ids.iter().any(|i| i == id) {
                        ids.push(id.to_string());
                    }
                }
            }
        });
    }
    found.then_some(ids)
}
