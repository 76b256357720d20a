//! Tree definition files: an XML dialect, static checks, and
//! instantiation against a registry of leaf factories.
//!
//! The grammar is described in `docs/tree_format.md`.

mod doc;
mod instantiate;
mod parse;
mod validate;
mod write;

pub use doc::{
    has_errors, Diagnostic, LeafKind, LeafModel, Location, NodeDef, PortDecl, PortDirection,
    Severity, TreeDef, TreeDocument,
};
pub use instantiate::{build_tree, instantiate, InstantiateError, LeafConfig, LeafFactory, LeafRegistry};
pub use parse::{check_document, parse_tree_definition, parse_with_models, DEFAULT_TREE_ID};
pub use validate::validate_switch_coverage;
pub use write::to_xml;

#[cfg(test)]
mod tests;
