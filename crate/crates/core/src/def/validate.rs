use std::collections::BTreeSet;

use super::doc::{Diagnostic, TreeDocument};
use crate::adaptive::NO_STRATEGIES;

/// Checks every switch on the document's strategy variable against the
/// strategy IDs a selector may emit. Missing cases are errors, cases for
/// unknown IDs are warnings.
pub fn validate_switch_coverage<S: AsRef<str>>(doc: &TreeDocument, strategy_ids: &[S]) -> Vec<Diagnostic> {
    let Some(var) = &doc.strategy_var else {
        return Vec::new();
    };
    let binding = format!("{{{var}}}");
    let mut expected: BTreeSet<&str> = strategy_ids.iter().map(AsRef::as_ref).collect();
    expected.insert(NO_STRATEGIES);
    let mut out = Vec::new();
    for t in &doc.trees {
        t.root.walk(&mut |n| {
            if n.kind != "SwitchStatement" || n.get("variable") != Some(binding.as_str()) {
                return;
            }
            let cases: BTreeSet<&str> = n
                .children
                .iter()
                .filter(|c| c.kind == "Case")
                .filter_map(|c| c.get("value"))
                .collect();
            for missing in expected.difference(&cases) {
                out.push(Diagnostic::error(
                    n.location,
                    "switch-coverage",
                    format!("switch `{}` has no case for strategy `{missing}`", n.display_name()),
                ));
            }
            for extra in cases.difference(&expected) {
                let loc = n
                    .children
                    .iter()
                    .find(|c| c.get("value") == Some(extra))
                    .map_or(n.location, |c| c.location);
                out.push(Diagnostic::warning(
                    loc,
                    "switch-extra-case",
                    format!("case `{extra}` does not match any strategy"),
                ));
            }
        });
    }
    out
}
