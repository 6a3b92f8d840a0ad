use std::sync::{Arc, Mutex, MutexGuard};

use otforge_core::ot::format::node_to_value;
use otforge_core::ot::{serialize, validate};
use otforge_core::sql::{execute, intermediate_results, is_empty_answer};
use otforge_core::tokenize::{words, SimpleTokenizer, Tokenizer};
use otforge_core::{
    Comparator, Database, ExecLimits, Literal, Node, NodePath, Op, OperationKind, OperationTree,
    ResultSet, SchemaGraph,
};
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::error::ServiceError;
use crate::export::{export, Export};
use crate::hints::hint;
use crate::model::{Lease, Phase, Question, Skip, SkipReason, Task, TokenAssignment};
use crate::prematch::prematch;
use crate::store::{self, Store};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub lease_ttl_secs: i64,
    pub limits: ExecLimits,
    /// When off, tasks stop at Phase1Done and export from there.
    pub token_assignment: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            lease_ttl_secs: 30 * 60,
            limits: ExecLimits::default(),
            token_assignment: true,
        }
    }
}

/// A change to one `Selection` node.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEdit {
    pub node_path: NodePath,
    pub comparator: Option<Comparator>,
    pub value: Option<Literal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeView {
    pub node_path: String,
    pub kind: OperationKind,
    pub args: serde_json::Value,
    pub hint: &'static str,
    pub result: Option<ResultSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub node_path: String,
    pub attribute: String,
    pub comparator: String,
    pub value: serde_json::Value,
}

/// A task with everything the annotation screens show: nodes in guided
/// (pre-order) sequence with hints and sample results, and the editable
/// constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskDetail {
    pub task: Task,
    pub node_order: Vec<NodeView>,
    pub constraints: Vec<Constraint>,
}

pub struct Service {
    store: Mutex<Store>,
    source: Mutex<Database>,
    schema: SchemaGraph,
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    tokenizer: Arc<dyn Tokenizer>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn require_annotator(annotator: &str) -> Result<(), ServiceError> {
    if annotator.trim().is_empty() {
        Err(ServiceError::MissingAnnotator)
    } else {
        Ok(())
    }
}

fn check_lease(
    task: &Task,
    annotator: &str,
    expected: Phase,
    now: i64,
) -> Result<(), ServiceError> {
    if task.phase != expected {
        return Err(ServiceError::WrongPhase {
            task: task.task_id,
            expected,
            actual: task.phase,
        });
    }
    match &task.lease {
        Some(l) if l.annotator == annotator && l.expires_at > now => Ok(()),
        Some(l) if l.annotator == annotator => Err(ServiceError::LeaseExpired(task.task_id)),
        _ => Err(ServiceError::NotLeased {
            task: task.task_id,
            annotator: annotator.to_string(),
        }),
    }
}

fn seconds_since(lease: &Option<Lease>, now: i64) -> Option<f64> {
    lease.as_ref().map(|l| (now - l.started_at) as f64 / 1000.0)
}

fn touch(task: &mut Task, annotator: &str) {
    if !task.phase1_touched.iter().any(|a| a == annotator) {
        task.phase1_touched.push(annotator.to_string());
    }
}

impl Service {
    /// Binds `store` to the schema of `source`.
    pub fn new(
        mut store: Store,
        source: Database,
        config: ServiceConfig,
    ) -> Result<Self, ServiceError> {
        let schema = source.load_schema()?;
        store.bind_schema(&schema)?;
        store.set_token_assignment(config.token_assignment)?;
        Ok(Service {
            store: Mutex::new(store),
            source: Mutex::new(source),
            schema,
            config,
            clock: Arc::new(SystemClock),
            tokenizer: Arc::new(SimpleTokenizer),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_tokenizer(mut self, tokenizer: Arc<dyn Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn schema(&self) -> &SchemaGraph {
        &self.schema
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn now(&self) -> i64 {
        self.clock.now_ms()
    }

    fn store(&self) -> MutexGuard<'_, Store> {
        lock(&self.store)
    }

    fn tokenize(&self, text: &str) -> Result<Question, ServiceError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ServiceError::EmptyQuestion);
        }
        Ok(Question {
            text: text.to_string(),
            tokens: words(self.tokenizer.as_ref(), text),
            tokenizer: self.tokenizer.version().to_string(),
        })
    }

    /// One Phase1Pending task per tree. Re-sending the same batch under the
    /// same key returns the original ids.
    pub fn create_tasks(
        &self,
        trees: &[OperationTree],
        idempotency_key: Option<&str>,
    ) -> Result<Vec<i64>, ServiceError> {
        for (index, tree) in trees.iter().enumerate() {
            if let Some(bound) = &tree.schema_id {
                if *bound != self.schema.id {
                    return Err(ServiceError::SchemaMismatch {
                        expected: self.schema.id.clone(),
                        found: bound.clone(),
                    });
                }
            }
            let violations = validate(tree, &self.schema);
            if !violations.is_empty() {
                return Err(ServiceError::InvalidTree { index, violations });
            }
        }
        let payload: String = trees.iter().map(|t| serialize(t) + "\n").collect();
        let now = self.now();
        let schema_id = self.schema.id.clone();
        self.store().tx(|tx| {
            if let Some(key) = idempotency_key {
                if let Some((stored, ids)) = store::find_batch(tx, key)? {
                    return if stored == payload {
                        Ok(ids)
                    } else {
                        Err(ServiceError::IdempotencyConflict(key.to_string()))
                    };
                }
            }
            let ids = trees
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.schema_id.get_or_insert_with(|| schema_id.clone());
                    store::insert_task(tx, &t, now)
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(key) = idempotency_key {
                store::insert_batch(tx, key, &payload, &ids)?;
            }
            Ok(ids)
        })
    }

    /// Leases the lowest-id free task in `phase`. An annotator who already
    /// holds a live lease in that phase gets the same task back. Phase 2
    /// never hands out a task to anyone who worked on it in phase 1.
    pub fn next_task(&self, annotator: &str, phase: Phase) -> Result<Option<Task>, ServiceError> {
        require_annotator(annotator)?;
        if !phase.is_queue() {
            return Err(ServiceError::NotAQueue(phase));
        }
        let now = self.now();
        let ttl = self.config.lease_ttl_secs * 1000;
        self.store().tx(|tx| {
            let held: Option<i64> = tx
                .query_row(
                    "SELECT task_id FROM tasks WHERE phase = ?1 AND lease_annotator = ?2 AND lease_expires > ?3 \
                     ORDER BY task_id LIMIT 1",
                    rusqlite::params![phase.name(), annotator, now],
                    |r| r.get(0),
                )
                .map(Some)
                .or_else(|e| match e {
                    rusqlite::Error::QueryReturnedNoRows => Ok(None),
                    e => Err(e),
                })?;
            if let Some(id) = held {
                return store::load_task(tx, id).map(Some);
            }
            let free: Option<i64> = tx
                .query_row(
                    "SELECT task_id FROM tasks WHERE phase = ?1 \
                     AND (lease_expires IS NULL OR lease_expires <= ?2) \
                     AND (?1 != 'Phase2Pending' OR NOT EXISTS \
                          (SELECT 1 FROM json_each(phase1_touched) WHERE value = ?3)) \
                     ORDER BY task_id LIMIT 1",
                    rusqlite::params![phase.name(), now, annotator],
                    |r| r.get(0),
                )
                .map(Some)
                .or_else(|e| match e {
                    rusqlite::Error::QueryReturnedNoRows => Ok(None),
                    e => Err(e),
                })?;
            let Some(id) = free else {
                return Ok(None);
            };
            let mut task = store::load_task(tx, id)?;
            task.lease = Some(Lease {
                annotator: annotator.to_string(),
                started_at: now,
                expires_at: now + ttl,
            });
            store::update_task(tx, &task)?;
            Ok(Some(task))
        })
    }

    pub fn task(&self, task_id: i64) -> Result<Task, ServiceError> {
        store::load_task(self.store().connection(), task_id)
    }

    pub fn task_detail(&self, task_id: i64) -> Result<TaskDetail, ServiceError> {
        let task = self.task(task_id)?;
        let results = {
            let db = lock(&self.source);
            intermediate_results(&task.tree, &self.schema, &db, self.config.limits)
        };
        let mut node_order = Vec::new();
        let mut constraints = Vec::new();
        for (path, node) in task.tree.root.preorder() {
            let (result, error) = match results.get(&path) {
                Some(Ok(r)) => (Some(r.clone()), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            if let Op::Selection {
                attribute,
                comparator,
                value,
            } = &node.op
            {
                constraints.push(Constraint {
                    node_path: path.to_string(),
                    attribute: attribute.to_string(),
                    comparator: comparator.symbol().to_string(),
                    value: otforge_core::ot::format::literal_to_value(value),
                });
            }
            node_order.push(NodeView {
                node_path: path.to_string(),
                kind: node.kind(),
                args: node_to_value(node)["args"].clone(),
                hint: hint(node, &self.schema),
                result,
                error,
            });
        }
        Ok(TaskDetail {
            task,
            node_order,
            constraints,
        })
    }

    /// Extends a live lease by the configured TTL.
    pub fn renew_lease(&self, task_id: i64, annotator: &str) -> Result<Task, ServiceError> {
        let now = self.now();
        let ttl = self.config.lease_ttl_secs * 1000;
        self.store().tx(|tx| {
            let mut task = store::load_task(tx, task_id)?;
            if !task.phase.is_queue() {
                return Err(ServiceError::NotAQueue(task.phase));
            }
            check_lease(&task, annotator, task.phase, now)?;
            if let Some(l) = &mut task.lease {
                l.expires_at = now + ttl;
            }
            store::update_task(tx, &task)?;
            Ok(task)
        })
    }

    pub fn submit_question(
        &self,
        task_id: i64,
        annotator: &str,
        text: &str,
    ) -> Result<Task, ServiceError> {
        require_annotator(annotator)?;
        let question = self.tokenize(text)?;
        let now = self.now();
        let promote = self.config.token_assignment;
        self.store().tx(|tx| {
            let mut task = store::load_task(tx, task_id)?;
            check_lease(&task, annotator, Phase::Phase1Pending, now)?;
            task.question = Some(question);
            task.phase1_annotator = Some(annotator.to_string());
            touch(&mut task, annotator);
            task.phase1_seconds = seconds_since(&task.lease, now);
            task.lease = None;
            store::record_transition(tx, &mut task, Phase::Phase1Done, Some(annotator), now)?;
            if promote {
                store::record_transition(tx, &mut task, Phase::Phase2Pending, None, now)?;
            }
            store::update_task(tx, &task)?;
            Ok(task)
        })
    }

    /// Changes comparators and values of `Selection` nodes. The adapted tree
    /// must validate and still produce a non-empty answer.
    pub fn adapt_constraints(
        &self,
        task_id: i64,
        annotator: &str,
        edits: &[ConstraintEdit],
    ) -> Result<Task, ServiceError> {
        require_annotator(annotator)?;
        let base = {
            let task = self.task(task_id)?;
            check_lease(&task, annotator, Phase::Phase1Pending, self.now())?;
            task.tree
        };
        let mut tree = base.clone();
        for edit in edits {
            let node = tree
                .root
                .at_mut(&edit.node_path)
                .ok_or_else(|| ServiceError::UnknownNodePath(edit.node_path.to_string()))?;
            let kind = node.kind();
            let Op::Selection {
                comparator, value, ..
            } = &mut node.op
            else {
                return Err(ServiceError::StructuralEdit(format!(
                    "{} is a {kind} node; only Selection comparators and values can change",
                    edit.node_path
                )));
            };
            if let Some(c) = edit.comparator {
                *comparator = c;
            }
            if let Some(v) = &edit.value {
                *value = v.clone();
            }
        }
        let violations = validate(&tree, &self.schema);
        if !violations.is_empty() {
            return Err(ServiceError::InvalidAdaptation(violations));
        }
        let result = {
            let db = lock(&self.source);
            execute(&tree, &self.schema, &db, self.config.limits)
                .map_err(|e| ServiceError::Execution(e.to_string()))?
        };
        if is_empty_answer(tree.root_kind(), &result) {
            return Err(ServiceError::EmptyResult);
        }
        let now = self.now();
        self.store().tx(|tx| {
            let mut task = store::load_task(tx, task_id)?;
            check_lease(&task, annotator, Phase::Phase1Pending, now)?;
            if task.tree != base {
                return Err(ServiceError::Conflict(task_id));
            }
            task.tree = tree;
            touch(&mut task, annotator);
            store::update_task(tx, &task)?;
            Ok(task)
        })
    }

    /// Adapts to a full proposed tree, which may differ from the current one
    /// only in `Selection` comparators and values.
    pub fn adapt_to_tree(
        &self,
        task_id: i64,
        annotator: &str,
        proposed: &OperationTree,
    ) -> Result<Task, ServiceError> {
        let current = self.task(task_id)?.tree;
        let edits = constraint_edits(&current.root, &proposed.root)?;
        self.adapt_constraints(task_id, annotator, &edits)
    }

    pub fn skip_task(
        &self,
        task_id: i64,
        annotator: &str,
        reason: SkipReason,
        note: Option<String>,
    ) -> Result<Task, ServiceError> {
        require_annotator(annotator)?;
        let now = self.now();
        self.store().tx(|tx| {
            let mut task = store::load_task(tx, task_id)?;
            check_lease(&task, annotator, Phase::Phase1Pending, now)?;
            task.skip = Some(Skip { reason, note });
            touch(&mut task, annotator);
            task.phase1_seconds = seconds_since(&task.lease, now);
            task.lease = None;
            store::record_transition(tx, &mut task, Phase::Skipped, Some(annotator), now)?;
            store::update_task(tx, &task)?;
            Ok(task)
        })
    }

    /// Suggested token assignments for the `Selection` values of a phase-2
    /// task.
    pub fn prematch(&self, task_id: i64) -> Result<Vec<TokenAssignment>, ServiceError> {
        let task = self.task(task_id)?;
        if task.phase != Phase::Phase2Pending {
            return Err(ServiceError::WrongPhase {
                task: task_id,
                expected: Phase::Phase2Pending,
                actual: task.phase,
            });
        }
        let question = task
            .question
            .ok_or_else(|| ServiceError::Corrupt(format!("task {task_id} has no question")))?;
        Ok(prematch(
            &task.tree,
            &question.tokens,
            self.tokenizer.as_ref(),
        ))
    }

    /// Finishes phase 2. `corrected` replaces the question text; the
    /// assignments then index into its new tokens.
    pub fn submit_tokens(
        &self,
        task_id: i64,
        annotator: &str,
        corrected: Option<&str>,
        assignments: Vec<TokenAssignment>,
    ) -> Result<Task, ServiceError> {
        require_annotator(annotator)?;
        let corrected = corrected.map(|t| self.tokenize(t)).transpose()?;
        let now = self.now();
        self.store().tx(|tx| {
            let mut task = store::load_task(tx, task_id)?;
            check_lease(&task, annotator, Phase::Phase2Pending, now)?;
            if task.phase1_touched.iter().any(|a| a == annotator) {
                return Err(ServiceError::SameAnnotator);
            }
            if let Some(q) = corrected {
                task.question = Some(q);
            }
            let len = task.question.as_ref().map_or(0, |q| q.tokens.len());
            for a in &assignments {
                if task.tree.root.at(&a.node_path).is_none() {
                    return Err(ServiceError::UnknownNodePath(a.node_path.to_string()));
                }
                if let Some(&index) = a.token_indices.iter().find(|&&i| i >= len) {
                    return Err(ServiceError::TokenOutOfRange { index, len });
                }
            }
            task.token_assignments = assignments;
            task.phase2_annotator = Some(annotator.to_string());
            task.phase2_seconds = seconds_since(&task.lease, now);
            task.lease = None;
            store::record_transition(tx, &mut task, Phase::Phase2Done, Some(annotator), now)?;
            store::update_task(tx, &task)?;
            Ok(task)
        })
    }

    pub fn export(&self, phase: Option<Phase>) -> Result<Export, ServiceError> {
        export(&self.store(), phase)
    }

    /// Runs `f` against the raw store; for audits and tests.
    pub fn with_store<T>(&self, f: impl FnOnce(&Store) -> T) -> T {
        f(&self.store())
    }
}

/// The Selection edits turning `current` into `proposed`, or an error if
/// anything else differs.
pub fn constraint_edits(
    current: &Node,
    proposed: &Node,
) -> Result<Vec<ConstraintEdit>, ServiceError> {
    let mut out = Vec::new();
    diff(current, proposed, NodePath::root(), &mut out)?;
    Ok(out)
}

fn diff(
    a: &Node,
    b: &Node,
    path: NodePath,
    out: &mut Vec<ConstraintEdit>,
) -> Result<(), ServiceError> {
    let structural = |what: &str| {
        Err(ServiceError::StructuralEdit(format!(
            "{what} changed at {path}"
        )))
    };
    if a.children.len() != b.children.len() || a.kind() != b.kind() {
        return structural("operation");
    }
    match (&a.op, &b.op) {
        (
            Op::Selection {
                attribute: aa,
                comparator: ac,
                value: av,
            },
            Op::Selection {
                attribute: ba,
                comparator: bc,
                value: bv,
            },
        ) => {
            if aa != ba {
                return structural("selection attribute");
            }
            if ac != bc || av != bv {
                out.push(ConstraintEdit {
                    node_path: path.clone(),
                    comparator: (ac != bc).then_some(*bc),
                    value: (av != bv).then(|| bv.clone()),
                });
            }
        }
        (x, y) if x != y => return structural("arguments"),
        _ => {}
    }
    for (i, (ca, cb)) in a.children.iter().zip(&b.children).enumerate() {
        diff(ca, cb, path.child(i), out)?;
    }
    Ok(())
}
