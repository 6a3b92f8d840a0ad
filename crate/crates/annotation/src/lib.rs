//! Two-phase annotation workflow for sampled operation trees.
//!
//! Phase 1: an annotator leases a tree, may adapt its filter constraints or
//! skip it, and writes a question. Phase 2: a different annotator corrects
//! the question and assigns question tokens to tree nodes. Finished tasks
//! export as corpus records together with a corpus report.
//!
//! State lives in a single SQLite store; [`http::router`] exposes the
//! [`Service`] as a JSON API.

pub mod clock;
pub mod error;
pub mod export;
pub mod hints;
pub mod http;
pub mod model;
pub mod prematch;
pub mod service;
pub mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::ServiceError;
pub use export::{export, Export, TimingSummary};
pub use model::{
    CorpusRecord, Lease, Phase, Question, SkipReason, Task, TokenAssignment, Transition,
};
pub use service::{ConstraintEdit, Service, ServiceConfig, TaskDetail};
pub use store::Store;
