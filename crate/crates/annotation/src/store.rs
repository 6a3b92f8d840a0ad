//! SQLite persistence. Every state change runs inside one immediate
//! transaction, so concurrent writers on the same file serialize.

use std::path::Path;
use std::time::Duration;

use otforge_core::ot::{parse, serialize};
use otforge_core::{OperationTree, SchemaGraph};
use rusqlite::{params, Connection, OptionalExtension, Row, Transaction, TransactionBehavior};

use crate::error::ServiceError;
use crate::model::{Lease, Phase, Question, Skip, Task, TokenAssignment, Transition};

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tasks (
    task_id INTEGER PRIMARY KEY,
    tree TEXT NOT NULL,
    original_tree TEXT NOT NULL,
    phase TEXT NOT NULL,
    question TEXT,
    assignments TEXT NOT NULL DEFAULT '[]',
    phase1_annotator TEXT,
    phase2_annotator TEXT,
    phase1_touched TEXT NOT NULL DEFAULT '[]',
    lease_annotator TEXT,
    lease_started INTEGER,
    lease_expires INTEGER,
    phase1_seconds REAL,
    phase2_seconds REAL,
    skip TEXT,
    created_at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS tasks_by_phase ON tasks (phase, task_id);
CREATE TABLE IF NOT EXISTS batches (
    idempotency_key TEXT PRIMARY KEY,
    payload TEXT NOT NULL,
    task_ids TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS transitions (
    id INTEGER PRIMARY KEY,
    task_id INTEGER NOT NULL REFERENCES tasks (task_id),
    from_phase TEXT,
    to_phase TEXT NOT NULL,
    annotator TEXT,
    at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS transitions_by_task ON transitions (task_id, id);
";

const TASK_COLUMNS: &str = "task_id, tree, original_tree, phase, question, assignments, phase1_annotator, \
    phase2_annotator, phase1_touched, lease_annotator, lease_started, lease_expires, phase1_seconds, \
    phase2_seconds, skip, created_at";

pub struct Store {
    conn: Connection,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("path", &self.conn.path())
            .finish()
    }
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let conn = Connection::open(path)?;
        conn.busy_timeout(Duration::from_secs(5))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self, ServiceError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, ServiceError> {
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn })
    }

    /// Runs `f` in an immediate transaction, committing only on success.
    pub fn tx<T>(
        &mut self,
        f: impl FnOnce(&Transaction<'_>) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let tx = self
            .conn
            .transaction_with_behavior(TransactionBehavior::Immediate)?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Binds the store to a schema on first use; later binds must carry the
    /// same schema id.
    pub fn bind_schema(&mut self, schema: &SchemaGraph) -> Result<(), ServiceError> {
        self.tx(|tx| {
            match get_meta(tx, "schema")? {
                Some(text) => {
                    let bound: SchemaGraph = serde_json::from_str(&text)
                        .map_err(|e| ServiceError::Corrupt(e.to_string()))?;
                    if bound.id != schema.id {
                        return Err(ServiceError::SchemaMismatch {
                            expected: bound.id,
                            found: schema.id.clone(),
                        });
                    }
                }
                None => {
                    let text = serde_json::to_string(schema).expect("schema serializes");
                    set_meta(tx, "schema", &text)?;
                }
            }
            Ok(())
        })
    }

    pub fn bound_schema(&self) -> Result<Option<SchemaGraph>, ServiceError> {
        get_meta(&self.conn, "schema")?
            .map(|t| serde_json::from_str(&t).map_err(|e| ServiceError::Corrupt(e.to_string())))
            .transpose()
    }

    pub fn set_token_assignment(&mut self, enabled: bool) -> Result<(), ServiceError> {
        self.tx(|tx| {
            set_meta(
                tx,
                "token_assignment",
                if enabled { "true" } else { "false" },
            )
        })
    }

    /// Defaults to enabled.
    pub fn token_assignment(&self) -> Result<bool, ServiceError> {
        Ok(get_meta(&self.conn, "token_assignment")?.is_none_or(|v| v == "true"))
    }
}

pub(crate) fn get_meta(conn: &Connection, key: &str) -> Result<Option<String>, ServiceError> {
    Ok(conn
        .query_row("SELECT value FROM meta WHERE key = ?1", [key], |r| r.get(0))
        .optional()?)
}

pub(crate) fn set_meta(conn: &Connection, key: &str, value: &str) -> Result<(), ServiceError> {
    conn.execute(
        "INSERT INTO meta (key, value) VALUES (?1, ?2) ON CONFLICT (key) DO UPDATE SET value = excluded.value",
        params![key, value],
    )?;
    Ok(())
}

fn corrupt(e: impl ToString) -> ServiceError {
    ServiceError::Corrupt(e.to_string())
}

fn json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ServiceError> {
    serde_json::from_str(text).map_err(corrupt)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

struct RawTask {
    task_id: i64,
    tree: String,
    original_tree: String,
    phase: String,
    question: Option<String>,
    assignments: String,
    phase1_annotator: Option<String>,
    phase2_annotator: Option<String>,
    phase1_touched: String,
    lease_annotator: Option<String>,
    lease_started: Option<i64>,
    lease_expires: Option<i64>,
    phase1_seconds: Option<f64>,
    phase2_seconds: Option<f64>,
    skip: Option<String>,
    created_at: i64,
}

impl RawTask {
    fn from_row(r: &Row<'_>) -> rusqlite::Result<Self> {
        Ok(RawTask {
            task_id: r.get(0)?,
            tree: r.get(1)?,
            original_tree: r.get(2)?,
            phase: r.get(3)?,
            question: r.get(4)?,
            assignments: r.get(5)?,
            phase1_annotator: r.get(6)?,
            phase2_annotator: r.get(7)?,
            phase1_touched: r.get(8)?,
            lease_annotator: r.get(9)?,
            lease_started: r.get(10)?,
            lease_expires: r.get(11)?,
            phase1_seconds: r.get(12)?,
            phase2_seconds: r.get(13)?,
            skip: r.get(14)?,
            created_at: r.get(15)?,
        })
    }

    fn into_task(self, transitions: Vec<Transition>) -> Result<Task, ServiceError> {
        let lease = match (self.lease_annotator, self.lease_started, self.lease_expires) {
            (Some(annotator), Some(started_at), Some(expires_at)) => Some(Lease {
                annotator,
                started_at,
                expires_at,
            }),
            _ => None,
        };
        Ok(Task {
            task_id: self.task_id,
            tree: parse(&self.tree).map_err(corrupt)?,
            original_tree: parse(&self.original_tree).map_err(corrupt)?,
            phase: self.phase.parse().map_err(corrupt)?,
            question: self.question.as_deref().map(json::<Question>).transpose()?,
            token_assignments: json::<Vec<TokenAssignment>>(&self.assignments)?,
            phase1_annotator: self.phase1_annotator,
            phase2_annotator: self.phase2_annotator,
            phase1_touched: json(&self.phase1_touched)?,
            lease,
            phase1_seconds: self.phase1_seconds,
            phase2_seconds: self.phase2_seconds,
            skip: self.skip.as_deref().map(json::<Skip>).transpose()?,
            created_at: self.created_at,
            transitions,
        })
    }
}

pub(crate) fn load_task(conn: &Connection, task_id: i64) -> Result<Task, ServiceError> {
    let raw = conn
        .query_row(
            &format!("SELECT {TASK_COLUMNS} FROM tasks WHERE task_id = ?1"),
            [task_id],
            RawTask::from_row,
        )
        .optional()?
        .ok_or(ServiceError::NotFound(task_id))?;
    raw.into_task(load_transitions(conn, task_id)?)
}

pub(crate) fn load_transitions(
    conn: &Connection,
    task_id: i64,
) -> Result<Vec<Transition>, ServiceError> {
    let mut stmt = conn.prepare_cached(
        "SELECT from_phase, to_phase, annotator, at FROM transitions WHERE task_id = ?1 ORDER BY id",
    )?;
    let rows = stmt
        .query_map([task_id], |r| {
            Ok((
                r.get::<_, Option<String>>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, Option<String>>(2)?,
                r.get::<_, i64>(3)?,
            ))
        })?
        .collect::<Result<Vec<_>, _>>()?;
    rows.into_iter()
        .map(|(from, to, annotator, at)| {
            Ok(Transition {
                from: from.map(|p| p.parse()).transpose().map_err(corrupt)?,
                to: to.parse().map_err(corrupt)?,
                annotator,
                at,
            })
        })
        .collect()
}

/// Task ids in `phases`, ascending.
pub(crate) fn task_ids(conn: &Connection, phases: &[Phase]) -> Result<Vec<i64>, ServiceError> {
    let mut out = Vec::new();
    let mut stmt =
        conn.prepare_cached("SELECT task_id FROM tasks WHERE phase = ?1 ORDER BY task_id")?;
    for p in phases {
        let ids = stmt
            .query_map([p.name()], |r| r.get::<_, i64>(0))?
            .collect::<Result<Vec<_>, _>>()?;
        out.extend(ids);
    }
    out.sort_unstable();
    Ok(out)
}

pub(crate) fn insert_task(
    conn: &Connection,
    tree: &OperationTree,
    now: i64,
) -> Result<i64, ServiceError> {
    let text = serialize(tree);
    conn.execute(
        "INSERT INTO tasks (tree, original_tree, phase, created_at) VALUES (?1, ?1, ?2, ?3)",
        params![text, Phase::Phase1Pending.name(), now],
    )?;
    let id = conn.last_insert_rowid();
    conn.execute(
        "INSERT INTO transitions (task_id, from_phase, to_phase, annotator, at) VALUES (?1, NULL, ?2, NULL, ?3)",
        params![id, Phase::Phase1Pending.name(), now],
    )?;
    Ok(id)
}

/// Writes every mutable column of `task`. Transitions are appended
/// separately through [`record_transition`].
pub(crate) fn update_task(conn: &Connection, task: &Task) -> Result<(), ServiceError> {
    let lease = task.lease.as_ref();
    conn.execute(
        "UPDATE tasks SET tree = ?2, phase = ?3, question = ?4, assignments = ?5, phase1_annotator = ?6, \
         phase2_annotator = ?7, phase1_touched = ?8, lease_annotator = ?9, lease_started = ?10, \
         lease_expires = ?11, phase1_seconds = ?12, phase2_seconds = ?13, skip = ?14 WHERE task_id = ?1",
        params![
            task.task_id,
            serialize(&task.tree),
            task.phase.name(),
            task.question.as_ref().map(to_json),
            to_json(&task.token_assignments),
            task.phase1_annotator,
            task.phase2_annotator,
            to_json(&task.phase1_touched),
            lease.map(|l| &l.annotator),
            lease.map(|l| l.started_at),
            lease.map(|l| l.expires_at),
            task.phase1_seconds,
            task.phase2_seconds,
            task.skip.as_ref().map(to_json),
        ],
    )?;
    Ok(())
}

/// Moves `task` to `to`, refusing edges outside the state machine.
pub(crate) fn record_transition(
    conn: &Connection,
    task: &mut Task,
    to: Phase,
    annotator: Option<&str>,
    now: i64,
) -> Result<(), ServiceError> {
    if !task.phase.can_transition(to) {
        return Err(ServiceError::IllegalTransition {
            from: task.phase,
            to,
        });
    }
    conn.execute(
        "INSERT INTO transitions (task_id, from_phase, to_phase, annotator, at) VALUES (?1, ?2, ?3, ?4, ?5)",
        params![task.task_id, task.phase.name(), to.name(), annotator, now],
    )?;
    task.transitions.push(Transition {
        from: Some(task.phase),
        to,
        annotator: annotator.map(str::to_string),
        at: now,
    });
    task.phase = to;
    Ok(())
}

pub(crate) fn find_batch(
    conn: &Connection,
    key: &str,
) -> Result<Option<(String, Vec<i64>)>, ServiceError> {
    let row: Option<(String, String)> = conn
        .query_row(
            "SELECT payload, task_ids FROM batches WHERE idempotency_key = ?1",
            [key],
            |r| Ok((r.get(0)?, r.get(1)?)),
        )
        .optional()?;
    row.map(|(payload, ids)| Ok((payload, json(&ids)?)))
        .transpose()
}

pub(crate) fn insert_batch(
    conn: &Connection,
    key: &str,
    payload: &str,
    ids: &[i64],
) -> Result<(), ServiceError> {
    conn.execute(
        "INSERT INTO batches (idempotency_key, payload, task_ids) VALUES (?1, ?2, ?3)",
        params![key, payload, to_json(&ids)],
    )?;
    Ok(())
}

/// Every recorded (from, to) edge, for auditing.
pub fn all_transitions(conn: &Connection) -> Result<Vec<(i64, Transition)>, ServiceError> {
    let ids: Vec<i64> = conn
        .prepare("SELECT task_id FROM tasks ORDER BY task_id")?
        .query_map([], |r| r.get(0))?
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for id in ids {
        out.extend(load_transitions(conn, id)?.into_iter().map(|t| (id, t)));
    }
    Ok(out)
}
