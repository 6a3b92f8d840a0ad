//! SQL compilation, execution and result comparison.

mod compile;
mod result;

use std::collections::BTreeMap;

use thiserror::Error;

pub use compile::{
    compile, compile_node, quote_ident, quote_text, render_literal, CompileError, CompiledQuery,
};
pub use result::{result_sets_equal, ResultSet, Scalar};

use crate::db::{Database, ExecError, ExecLimits};
use crate::ot::{NodePath, OperationKind, OperationTree};
use crate::schema::SchemaGraph;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Compiles and runs the whole tree.
pub fn execute(
    tree: &OperationTree,
    schema: &SchemaGraph,
    db: &Database,
    limits: ExecLimits,
) -> Result<ResultSet, RunError> {
    let q = compile(tree, schema)?;
    Ok(db.query(&q.sql, q.columns, limits)?)
}

/// Result of every subtree, keyed by node path. A failing node is reported
/// on its own; its siblings and ancestors are still evaluated.
pub fn intermediate_results(
    tree: &OperationTree,
    schema: &SchemaGraph,
    db: &Database,
    limits: ExecLimits,
) -> BTreeMap<NodePath, Result<ResultSet, RunError>> {
    tree.root
        .preorder()
        .into_iter()
        .map(|(path, node)| {
            let r = compile_node(node, schema)
                .map_err(RunError::from)
                .and_then(|q| Ok(db.query(&q.sql, q.columns, limits)?));
            (path, r)
        })
        .collect()
}

/// Whether a result counts as "no answer": no rows, a `Count` of zero, or a
/// NULL `Sum`/`Average`. Boolean (`IsEmpty`) answers are never empty.
pub fn is_empty_answer(root: OperationKind, result: &ResultSet) -> bool {
    match root {
        OperationKind::IsEmpty => false,
        OperationKind::Count => matches!(result.scalar(), None | Some(Scalar::Integer(0))),
        OperationKind::Sum | OperationKind::Average => result.scalar().is_none_or(Scalar::is_null),
        _ => result.is_empty(),
    }
}
