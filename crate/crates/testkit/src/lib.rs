//! Fixture databases, hand-built trees and a reference evaluator shared by
//! the integration and acceptance tests.

pub mod corpus;
pub mod fixtures;
pub mod interp;
pub mod trees;

pub use fixtures::Fixture;
pub use interp::{evaluate, evaluate_node, Tables};
