//! Operation trees: data model, grammar, validation and canonical format.

pub mod format;
pub mod grammar;
mod tree;
pub mod validate;

pub use format::{parse, serialize, ParseError};
pub use grammar::{
    from_rule_sequence, to_rule_sequence, DerivationError, Grammar, RuleId, RuleStep,
};
pub use tree::{
    AttrRef, Comparator, GroupVariant, Literal, Node, NodePath, NonTerminal, Op, OperationKind,
    OperationTree,
};
pub use validate::{validate, Relation, Scope, Violation};
