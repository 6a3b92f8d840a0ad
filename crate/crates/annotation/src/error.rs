use otforge_core::db::DbError;
use otforge_core::ot::Violation;
use thiserror::Error;

use crate::model::Phase;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("tree {index} is invalid: {}", join(.violations))]
    InvalidTree {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("idempotency key `{0}` was already used with a different payload")]
    IdempotencyConflict(String),
    #[error("task {0} not found")]
    NotFound(i64),
    #[error("annotator id must not be empty")]
    MissingAnnotator,
    #[error("task {task} is not leased by `{annotator}`")]
    NotLeased { task: i64, annotator: String },
    #[error("lease on task {0} expired")]
    LeaseExpired(i64),
    #[error("task {task} is {actual}, expected {expected}")]
    WrongPhase {
        task: i64,
        expected: Phase,
        actual: Phase,
    },
    #[error("{0} is not a queue phase")]
    NotAQueue(Phase),
    #[error("{0} tasks are not exportable")]
    NotExportable(Phase),
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("structural edit: {0}")]
    StructuralEdit(String),
    #[error("adapted tree is invalid: {}", join(.0))]
    InvalidAdaptation(Vec<Violation>),
    #[error("empty result")]
    EmptyResult,
    #[error("execution failed: {0}")]
    Execution(String),
    #[error("question must not be empty")]
    EmptyQuestion,
    #[error("token index {index} out of range for a {len}-token question")]
    TokenOutOfRange { index: usize, len: usize },
    #[error("unknown node path {0}")]
    UnknownNodePath(String),
    #[error("phase 1 and phase 2 annotators must differ")]
    SameAnnotator,
    #[error("task {0} changed while the request was processed")]
    Conflict(i64),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("store error: {0}")]
    Store(#[from] rusqlite::Error),
    #[error(transparent)]
    Database(#[from] DbError),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl ServiceError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidTree { .. } => "invalid_tree",
            ServiceError::SchemaMismatch { .. } => "schema_mismatch",
            ServiceError::IdempotencyConflict(_) => "idempotency_conflict",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::MissingAnnotator => "missing_annotator",
            ServiceError::NotLeased { .. } => "not_leased",
            ServiceError::LeaseExpired(_) => "lease_expired",
            ServiceError::WrongPhase { .. } => "wrong_phase",
            ServiceError::NotAQueue(_) => "not_a_queue",
            ServiceError::NotExportable(_) => "not_exportable",
            ServiceError::IllegalTransition { .. } => "illegal_transition",
            ServiceError::StructuralEdit(_) => "structural_edit",
            ServiceError::InvalidAdaptation(_) => "invalid_adaptation",
            ServiceError::EmptyResult => "empty_result",
            ServiceError::Execution(_) => "execution_error",
            ServiceError::EmptyQuestion => "empty_question",
            ServiceError::TokenOutOfRange { .. } => "token_out_of_range",
            ServiceError::UnknownNodePath(_) => "unknown_node_path",
            ServiceError::SameAnnotator => "same_annotator",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Corrupt(_) => "corrupt_store",
            ServiceError::Store(_) => "store_error",
            ServiceError::Database(_) => "database_error",
        }
    }
}
