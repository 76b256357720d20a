use super::*;
use crate::bt::{Action, Blackboard, NodeStatus, ScopeId, Tree, Value, ValueType};

fn errors(text: &str) -> Vec<Diagnostic> {
    parse_tree_definition(text).expect_err("expected diagnostics")
}

fn rules(diags: &[Diagnostic]) -> Vec<&'static str> {
    diags.iter().map(|d| d.rule).collect()
}

fn registry() -> LeafRegistry<()> {
    let mut reg = LeafRegistry::new();
    reg.register(
        LeafModel::action("SetAngle").input("value", ValueType::Real).output("angle", ValueType::Real),
        |_| {
            Box::new(Action::new(|ctx| {
                let v: f64 = ctx.input("value")?;
                ctx.output("angle", v)?;
                Ok(NodeStatus::Success)
            }))
        },
    );
    reg
}

const SWITCH_DOC: &str = r#"
<root main_tree_to_execute="Main" strategy_var="strategy_id">
  <BehaviorTree ID="Main">
    <SwitchStatement variable="{strategy_id}">
      <Case value="low_torque"><AlwaysSuccess/></Case>
      <Case value="high_torque"><AlwaysSuccess/></Case>
      CASES
    </SwitchStatement>
  </BehaviorTree>
</root>"#;

#[test]
fn bare_node_is_single_tree_document() {
    let doc = parse_tree_definition("<Sequence><AlwaysSuccess/></Sequence>").unwrap();
    assert_eq!(doc.trees.len(), 1);
    let root = &doc.main_tree().unwrap().root;
    assert_eq!(root.kind, "Sequence");
    assert_eq!(root.children.len(), 1);
    assert_eq!(root.children[0].kind, "AlwaysSuccess");
}

#[test]
fn retry_attempts_literal_binds_integer() {
    let text = r#"<RetryUntilSuccessful num_attempts="5"><AlwaysFailure/></RetryUntilSuccessful>"#;
    let doc = parse_tree_definition(text).unwrap();
    assert_eq!(doc.main_tree().unwrap().root.get("num_attempts"), Some("5"));
    let mut tree = build_tree(&doc, &LeafRegistry::<()>::new(), Blackboard::new()).unwrap();
    for _ in 0..4 {
        assert_eq!(tree.tick(&mut ()).0, NodeStatus::Running);
    }
    assert_eq!(tree.tick(&mut ()).0, NodeStatus::Failure);
}

#[test]
fn empty_composite_is_an_arity_error() {
    let d = errors("<root><BehaviorTree ID=\"T\">\n  <Fallback/>\n</BehaviorTree></root>");
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].rule, "arity");
    assert!(d[0].message.contains("composite requires ≥1 child"));
    assert_eq!((d[0].location.line, d[0].location.col), (2, 3));
}

#[test]
fn decorator_arity() {
    let d = errors("<Inverter><AlwaysSuccess/><AlwaysSuccess/></Inverter>");
    assert_eq!(rules(&d), ["arity"]);
    let d = errors("<AlwaysSuccess><AlwaysSuccess/></AlwaysSuccess>");
    assert_eq!(rules(&d), ["arity"]);
}

#[test]
fn unknown_kind_and_port() {
    assert_eq!(rules(&errors("<Sequence><Frobnicate/></Sequence>")), ["unknown-node"]);
    assert_eq!(rules(&errors(r#"<Sequence colour="red"><AlwaysSuccess/></Sequence>"#)), ["unknown-port"]);
    let text = r#"<root><BehaviorTree ID="T"><SetAngle value="1" speed="2"/></BehaviorTree>
      <TreeNodesModel><Action ID="SetAngle"><input_port name="value" type="real"/></Action></TreeNodesModel></root>"#;
    assert_eq!(rules(&errors(text)), ["unknown-port"]);
}

#[test]
fn external_models_admit_leaves() {
    let text = r#"<SetAngle value="1.5" angle="{a}"/>"#;
    assert_eq!(rules(&errors(text)), ["unknown-node"]);
    let doc = parse_with_models(text, &registry().models()).unwrap();
    assert!(doc.model("SetAngle").is_some());
}

#[test]
fn literal_port_type_is_checked() {
    let text = r#"<SetAngle value="fast" angle="{a}"/>"#;
    let d = parse_with_models(text, &registry().models()).unwrap_err();
    assert_eq!(rules(&d), ["port-type"]);
    let text = r#"<SetAngle value="1.0" angle="3"/>"#;
    let d = parse_with_models(text, &registry().models()).unwrap_err();
    assert_eq!(rules(&d), ["port-binding"]);
}

#[test]
fn malformed_markup_has_location() {
    let d = errors("<Sequence>\n  <AlwaysSuccess>\n</Sequence>");
    assert_eq!(d[0].rule, "xml");
    assert_eq!(d[0].location.line, 3);
}

#[test]
fn subtree_resolution_and_cycles() {
    let text = r#"<root main_tree_to_execute="A"><BehaviorTree ID="A"><SubTree ID="Nope"/></BehaviorTree></root>"#;
    assert_eq!(rules(&errors(text)), ["subtree-unresolved"]);
    let text = r#"<root main_tree_to_execute="A">
      <BehaviorTree ID="A"><SubTree ID="B"/></BehaviorTree>
      <BehaviorTree ID="B"><Sequence><SubTree ID="A"/></Sequence></BehaviorTree></root>"#;
    let d = errors(text);
    assert_eq!(rules(&d), ["subtree-cycle"]);
    assert!(d[0].message.contains("A -> B -> A"));
}

#[test]
fn main_tree_must_exist() {
    let text = r#"<root main_tree_to_execute="X"><BehaviorTree ID="A"><AlwaysSuccess/></BehaviorTree></root>"#;
    assert_eq!(rules(&errors(text)), ["main-tree"]);
    let text = r#"<root><BehaviorTree ID="A"><AlwaysSuccess/></BehaviorTree><BehaviorTree ID="B"><AlwaysSuccess/></BehaviorTree></root>"#;
    assert_eq!(rules(&errors(text)), ["main-tree"]);
}

#[test]
fn case_outside_switch() {
    assert_eq!(
        rules(&errors(r#"<Sequence><Case value="x"><AlwaysSuccess/></Case></Sequence>"#)),
        ["misplaced-case"]
    );
}

#[test]
fn full_coverage_has_no_errors() {
    let doc = parse_tree_definition(&SWITCH_DOC.replace("CASES", r#"<Case value="no_strategies"><AlwaysSuccess/></Case>"#)).unwrap();
    assert!(validate_switch_coverage(&doc, &["low_torque", "high_torque"]).is_empty());
}

#[test]
fn missing_sentinel_case_is_error() {
    let doc = parse_tree_definition(&SWITCH_DOC.replace("CASES", "")).unwrap();
    let d = validate_switch_coverage(&doc, &["low_torque", "high_torque"]);
    assert_eq!(d.len(), 1);
    assert!(d[0].is_error());
    assert_eq!(d[0].rule, "switch-coverage");
    assert!(d[0].message.contains("no_strategies"));
}

#[test]
fn extra_case_is_warning() {
    let doc = parse_tree_definition(&SWITCH_DOC.replace(
        "CASES",
        r#"<Case value="no_strategies"><AlwaysSuccess/></Case><Case value="medium_torque"><AlwaysSuccess/></Case>"#,
    ))
    .unwrap();
    let d = validate_switch_coverage(&doc, &["low_torque", "high_torque"]);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].severity, Severity::Warning);
    assert!(!has_errors(&d));
}

#[test]
fn diagnostic_line_format() {
    let d = Diagnostic::error(Location { line: 3, col: 7 }, "arity", "composite requires ≥1 child");
    assert_eq!(d.to_string(), "error:3:7:arity:composite requires ≥1 child");
}

#[test]
fn unregistered_leaf_is_named() {
    let text = r#"<root><BehaviorTree ID="T"><ManipulateTarget/></BehaviorTree>
      <TreeNodesModel><Action ID="ManipulateTarget"/></TreeNodesModel></root>"#;
    let doc = parse_tree_definition(text).unwrap();
    let err = instantiate(&doc, &registry(), &mut Blackboard::new()).unwrap_err();
    assert!(matches!(&err, InstantiateError::UnregisteredLeaf { leaf, .. } if leaf == "ManipulateTarget"));
    assert!(err.to_string().contains("ManipulateTarget"));
}

#[test]
fn subtree_remap_writes_through_to_outer_key() {
    let text = r#"<root main_tree_to_execute="Main">
      <BehaviorTree ID="Main"><SubTree ID="Inner" angle="{valve_angle}" value="2.5"/></BehaviorTree>
      <BehaviorTree ID="Inner"><SetAngle value="{value}" angle="{angle}"/></BehaviorTree>
    </root>"#;
    let reg = registry();
    let doc = parse_with_models(text, &reg.models()).unwrap();
    let mut tree: Tree<()> = build_tree(&doc, &reg, Blackboard::new()).unwrap();
    assert_eq!(tree.tick(&mut ()).0, NodeStatus::Success);
    let bb = tree.blackboard();
    assert_eq!(bb.get(ScopeId::ROOT, "valve_angle"), Ok(&Value::Real(2.5)));
    // the literal lives only in the subtree scope
    assert!(!bb.contains(ScopeId::ROOT, "value"));
    assert!(!bb.contains(ScopeId::ROOT, "angle"));
}

#[test]
fn key_type_mismatch_against_blackboard() {
    let reg = registry();
    let doc = parse_with_models(r#"<SetAngle value="{v}" angle="{a}"/>"#, &reg.models()).unwrap();
    let mut bb = Blackboard::new();
    bb.set(ScopeId::ROOT, "v", true).unwrap();
    let err = instantiate(&doc, &reg, &mut bb).unwrap_err();
    assert!(matches!(err, InstantiateError::PortType { .. }));
}

#[test]
fn serializer_round_trips() {
    let text = r#"<root main_tree_to_execute="Main" strategy_var="strategy_id">
      <BehaviorTree ID="Main">
        <Sequence name="top &amp; tail">
          <RetryUntilSuccessful num_attempts="{n}" exempt_reasons="regrasp,strategy_switch" attempt="{attempt}">
            <SwitchStatement variable="{strategy_id}">
              <Case value="a"><SubTree ID="Inner" angle="{valve_angle}" value="1"/></Case>
              <Default><AlwaysFailure/></Default>
            </SwitchStatement>
          </RetryUntilSuccessful>
        </Sequence>
      </BehaviorTree>
      <BehaviorTree ID="Inner"><SetAngle value="{value}" angle="{angle}"/></BehaviorTree>
      <TreeNodesModel><Action ID="SetAngle"><input_port name="value" type="real"/><output_port name="angle" type="real"/></Action></TreeNodesModel>
    </root>"#;
    let doc = parse_tree_definition(text).unwrap();
    let again = parse_tree_definition(&to_xml(&doc)).unwrap();
    assert!(doc.same_structure(&again));
    assert_eq!(to_xml(&doc), to_xml(&again));
}
