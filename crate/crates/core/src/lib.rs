//! Operation-tree toolkit for building semantic-parsing corpora over
//! relational databases.
//!
//! The crate is organised around the operation tree (OT), a binary tree of
//! relational operations derived from a small context-free grammar:
//!
//! * [`ot`] defines the tree, the grammar and its rule linearization,
//!   schema validation and the canonical JSON format.
//! * [`schema`] models a database schema as a foreign-key graph and
//!   enumerates join paths.
//! * [`db`] wraps a read-only SQLite source: schema introspection, value
//!   sampling and query execution.
//! * [`sampler`] draws random trees and filters them down to executable,
//!   non-empty ones.
//! * [`sql`] compiles trees to SQL, executes them and compares result sets.
//! * [`analysis`] scores tree hardness and computes corpus statistics.
//! * [`tokenize`] is the question tokenizer shared by analysis and the
//!   annotation service.

pub mod analysis;
pub mod db;
pub mod ot;
pub mod sampler;
pub mod schema;
pub mod sql;
pub mod tokenize;

pub use analysis::{CorpusReport, Hardness, HardnessCategory};
pub use db::{Database, ExecLimits};
pub use ot::{
    AttrRef, Comparator, GroupVariant, Literal, Node, NodePath, Op, OperationKind, OperationTree,
};
pub use sampler::{QuestionType, SampleConfig};
pub use schema::{ColumnType, JoinPath, SchemaGraph};
pub use sql::{ResultSet, Scalar};
