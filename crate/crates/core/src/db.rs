//! Read-only access to a SQLite source database.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, RngExt};
use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use thiserror::Error;

use crate::ot::Literal;
use crate::schema::{
    Attribute, ColumnRef, ColumnType, ForeignKey, SchemaError, SchemaGraph, Table,
};
use crate::sql::{ResultSet, Scalar};

#[derive(Debug, Error)]
pub enum DbError {
    #[error("cannot open database `{path}`: {message}")]
    Unreachable { path: String, message: String },
    #[error("introspection failed: {0}")]
    Introspection(#[from] rusqlite::Error),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("query failed: {message} [sql: {sql}]")]
    Engine { sql: String, message: String },
    #[error("query exceeded {timeout_ms} ms [sql: {sql}]")]
    Timeout { sql: String, timeout_ms: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValueError {
    #[error("no value available for {table}.{column}")]
    NoValueAvailable { table: String, column: String },
    #[error("value lookup failed for {table}.{column}: {message}")]
    Engine {
        table: String,
        column: String,
        message: String,
    },
}

/// Execution limits: rows beyond `row_cap` are dropped and the result is
/// flagged as truncated; queries running past `timeout_ms` are interrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ExecLimits {
    pub row_cap: usize,
    pub timeout_ms: u64,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            row_cap: 1000,
            timeout_ms: 10_000,
        }
    }
}

/// Source of literal values for `Selection` nodes.
pub trait ValueSource {
    /// A value drawn uniformly from the distinct non-NULL values of the
    /// column, converted to the column's scalar type.
    fn sample_value(
        &self,
        table: &str,
        attribute: &Attribute,
        rng: &mut dyn Rng,
    ) -> Result<Literal, ValueError>;
}

/// A read-only SQLite connection plus a small cache of distinct-value counts.
pub struct Database {
    conn: Connection,
    path: Option<PathBuf>,
    distinct_counts: RefCell<HashMap<(String, String), i64>>,
}

impl std::fmt::Debug for Database {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Database")
            .field("path", &self.path)
            .finish()
    }
}

impl Database {
    /// Opens a database file read-only. The file must exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let path = path.as_ref();
        let unreachable = |message: String| DbError::Unreachable {
            path: path.display().to_string(),
            message,
        };
        if !path.is_file() {
            return Err(unreachable("no such file".into()));
        }
        let conn = Connection::open_with_flags(
            path,
            OpenFlags::SQLITE_OPEN_READ_ONLY
                | OpenFlags::SQLITE_OPEN_NO_MUTEX
                | OpenFlags::SQLITE_OPEN_URI,
        )
        .map_err(|e| unreachable(e.to_string()))?;
        conn.query_row("SELECT count(*) FROM sqlite_master", [], |r| {
            r.get::<_, i64>(0)
        })
        .map_err(|e| unreachable(e.to_string()))?;
        Ok(Database {
            conn,
            path: Some(path.to_path_buf()),
            distinct_counts: RefCell::new(HashMap::new()),
        })
    }

    /// Wraps an existing connection (e.g. an in-memory fixture).
    pub fn from_connection(conn: Connection) -> Self {
        Database {
            conn,
            path: None,
            distinct_counts: RefCell::new(HashMap::new()),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Schema id derived from the file name (`chinook.sqlite` → `chinook`),
    /// or `memory` for in-memory databases.
    pub fn default_schema_id(&self) -> String {
        self.path
            .as_deref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "memory".to_string())
    }

    /// Introspects tables, columns, declared types, primary keys and foreign
    /// keys.
    pub fn load_schema(&self) -> Result<SchemaGraph, DbError> {
        self.load_schema_as(&self.default_schema_id())
    }

    pub fn load_schema_as(&self, id: &str) -> Result<SchemaGraph, DbError> {
        let mut stmt = self.conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name",
        )?;
        let names: Vec<String> = stmt
            .query_map([], |r| r.get(0))?
            .collect::<Result<_, _>>()?;
        let mut tables = Vec::new();
        let mut fks = Vec::new();
        for name in &names {
            let mut cols = self
                .conn
                .prepare("SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid")?;
            let attributes: Vec<Attribute> = cols
                .query_map([name], |r| {
                    let declared: String = r.get(1)?;
                    Ok(Attribute {
                        name: r.get(0)?,
                        column_type: ColumnType::from_declared(&declared),
                        primary_key: r.get::<_, i64>(2)? > 0,
                    })
                })?
                .collect::<Result<_, _>>()?;
            let mut fk_stmt = self.conn.prepare(
                "SELECT \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq",
            )?;
            let raw: Vec<(String, String, Option<String>)> = fk_stmt
                .query_map([name], |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)))?
                .collect::<Result<_, _>>()?;
            for (target, from, to) in raw {
                let to = match to {
                    Some(t) => t,
                    None => self.primary_key_of(&target)?.unwrap_or_default(),
                };
                fks.push(ForeignKey::new(
                    ColumnRef::new(name, from),
                    ColumnRef::new(target, to),
                ));
            }
            tables.push(Table::new(name.clone(), attributes));
        }
        Ok(SchemaGraph::new(id, tables, fks)?)
    }

    fn primary_key_of(&self, table: &str) -> Result<Option<String>, rusqlite::Error> {
        let mut stmt = self
            .conn
            .prepare("SELECT name FROM pragma_table_info(?1) WHERE pk = 1")?;
        let mut rows = stmt.query([table])?;
        Ok(match rows.next()? {
            Some(r) => Some(r.get(0)?),
            None => None,
        })
    }

    /// Runs `sql`, materializing at most `limits.row_cap` rows.
    pub fn query(
        &self,
        sql: &str,
        columns: Vec<String>,
        limits: ExecLimits,
    ) -> Result<ResultSet, ExecError> {
        let deadline = Instant::now() + Duration::from_millis(limits.timeout_ms);
        let _ = self
            .conn
            .progress_handler(1000, Some(move || Instant::now() > deadline));
        let result = self.query_inner(sql, columns, limits.row_cap);
        let _ = self.conn.progress_handler(0, None::<fn() -> bool>);
        result.map_err(|e| match e {
            rusqlite::Error::SqliteFailure(f, _)
                if f.code == rusqlite::ErrorCode::OperationInterrupted =>
            {
                ExecError::Timeout {
                    sql: sql.to_string(),
                    timeout_ms: limits.timeout_ms,
                }
            }
            other => ExecError::Engine {
                sql: sql.to_string(),
                message: other.to_string(),
            },
        })
    }

    fn query_inner(
        &self,
        sql: &str,
        columns: Vec<String>,
        cap: usize,
    ) -> Result<ResultSet, rusqlite::Error> {
        let mut stmt = self.conn.prepare(sql)?;
        let width = stmt.column_count();
        let columns = if columns.len() == width {
            columns
        } else {
            stmt.column_names()
                .into_iter()
                .map(str::to_string)
                .collect()
        };
        let mut rows = stmt.query([])?;
        let mut out = ResultSet::new(columns, Vec::new());
        while let Some(row) = rows.next()? {
            if out.rows.len() == cap {
                out.truncated = true;
                break;
            }
            let cells = (0..width)
                .map(|i| row.get_ref(i).map(scalar_from_ref))
                .collect::<Result<Vec<_>, _>>()?;
            out.rows.push(cells);
        }
        Ok(out)
    }

    /// All rows of `table`, in storage order.
    pub fn table_rows(&self, table: &str) -> Result<ResultSet, ExecError> {
        let sql = format!("SELECT * FROM {}", crate::sql::quote_ident(table));
        self.query(
            &sql,
            Vec::new(),
            ExecLimits {
                row_cap: usize::MAX,
                ..ExecLimits::default()
            },
        )
    }

    fn distinct_count(&self, table: &str, column: &str) -> Result<i64, rusqlite::Error> {
        let key = (table.to_string(), column.to_string());
        if let Some(n) = self.distinct_counts.borrow().get(&key) {
            return Ok(*n);
        }
        let sql = format!(
            "SELECT COUNT(DISTINCT {c}) FROM {t} WHERE {c} IS NOT NULL",
            c = crate::sql::quote_ident(column),
            t = crate::sql::quote_ident(table)
        );
        let n: i64 = self.conn.query_row(&sql, [], |r| r.get(0))?;
        self.distinct_counts.borrow_mut().insert(key, n);
        Ok(n)
    }
}

pub fn scalar_from_ref(v: ValueRef<'_>) -> Scalar {
    match v {
        ValueRef::Null => Scalar::Null,
        ValueRef::Integer(i) => Scalar::Integer(i),
        ValueRef::Real(r) => Scalar::Real(r),
        ValueRef::Text(t) => Scalar::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Scalar::Blob(b.to_vec()),
    }
}

/// Converts a stored value to a literal of the column's type, if it has a
/// faithful representation.
pub fn literal_for(column_type: ColumnType, value: &Scalar) -> Option<Literal> {
    match (column_type, value) {
        (ColumnType::Integer, Scalar::Integer(i)) => Some(Literal::Integer(*i)),
        (ColumnType::Integer, Scalar::Real(r)) if r.fract() == 0.0 && r.abs() < 9.0e15 => {
            Some(Literal::Integer(*r as i64))
        }
        (ColumnType::Real, Scalar::Integer(i)) => Some(Literal::Integer(*i)),
        (ColumnType::Real, Scalar::Real(r)) if r.is_finite() => Some(Literal::Real(*r)),
        (ColumnType::Text, Scalar::Text(s)) => Some(Literal::Text(s.clone())),
        (ColumnType::Text, Scalar::Integer(i)) => Some(Literal::Text(i.to_string())),
        (ColumnType::Boolean, Scalar::Integer(i)) => Some(Literal::Boolean(*i != 0)),
        (ColumnType::Date, Scalar::Text(s)) => Some(Literal::Text(s.clone())),
        (ColumnType::Date, Scalar::Integer(i)) => Some(Literal::Integer(*i)),
        _ => None,
    }
}

impl ValueSource for Database {
    fn sample_value(
        &self,
        table: &str,
        attribute: &Attribute,
        rng: &mut dyn Rng,
    ) -> Result<Literal, ValueError> {
        let engine = |e: rusqlite::Error| ValueError::Engine {
            table: table.to_string(),
            column: attribute.name.clone(),
            message: e.to_string(),
        };
        let none = || ValueError::NoValueAvailable {
            table: table.to_string(),
            column: attribute.name.clone(),
        };
        let n = self
            .distinct_count(table, &attribute.name)
            .map_err(engine)?;
        if n == 0 {
            return Err(none());
        }
        let k = rng.random_range(0..n);
        let sql = format!(
            "SELECT DISTINCT {c} FROM {t} WHERE {c} IS NOT NULL ORDER BY {c} LIMIT 1 OFFSET ?1",
            c = crate::sql::quote_ident(&attribute.name),
            t = crate::sql::quote_ident(table)
        );
        let value = self
            .conn
            .query_row(&sql, [k], |r| r.get_ref(0).map(scalar_from_ref))
            .map_err(engine)?;
        literal_for(attribute.column_type, &value).ok_or_else(none)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn db(sql: &str) -> Database {
        let conn = Connection::open_in_memory().unwrap();
        conn.execute_batch(sql).unwrap();
        Database::from_connection(conn)
    }

    #[test]
    fn single_table_no_fks() {
        let d = db("CREATE TABLE t (id INTEGER PRIMARY KEY, name TEXT);");
        let s = d.load_schema().unwrap();
        assert_eq!(s.id, "memory");
        assert_eq!(s.tables.len(), 1);
        assert!(s.fk_edges.is_empty());
        assert!(s.tables[0].attributes[0].primary_key);
    }

    #[test]
    fn fk_to_implicit_primary_key() {
        let d = db("CREATE TABLE a (id INTEGER PRIMARY KEY);
                    CREATE TABLE b (id INTEGER PRIMARY KEY, a_id INTEGER REFERENCES a);");
        let s = d.load_schema().unwrap();
        assert_eq!(
            s.fk_edges,
            vec![ForeignKey::new(
                ColumnRef::new("b", "a_id"),
                ColumnRef::new("a", "id")
            )]
        );
    }

    #[test]
    fn fk_to_missing_column_is_an_error() {
        let d = db("CREATE TABLE a (id INTEGER PRIMARY KEY);
                    CREATE TABLE b (id INTEGER PRIMARY KEY, a_id INTEGER REFERENCES a(nope));");
        assert!(matches!(
            d.load_schema(),
            Err(DbError::Schema(SchemaError::DanglingForeignKey { .. }))
        ));
    }

    #[test]
    fn missing_file_is_unreachable() {
        assert!(matches!(
            Database::open("/nonexistent/x.sqlite"),
            Err(DbError::Unreachable { .. })
        ));
    }

    #[test]
    fn single_value_column_always_returns_it() {
        let d = db("CREATE TABLE t (v TEXT); INSERT INTO t VALUES ('x'), ('x'), (NULL);");
        let attr = Attribute::new("v", ColumnType::Text);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(
                d.sample_value("t", &attr, &mut rng).unwrap(),
                Literal::Text("x".into())
            );
        }
    }

    #[test]
    fn all_null_column_has_no_value() {
        let d = db("CREATE TABLE t (v INTEGER); INSERT INTO t VALUES (NULL);");
        let attr = Attribute::new("v", ColumnType::Integer);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            d.sample_value("t", &attr, &mut rng),
            Err(ValueError::NoValueAvailable {
                table: "t".into(),
                column: "v".into()
            })
        );
    }

    #[test]
    fn row_cap_truncates() {
        let d = db("CREATE TABLE t (v INTEGER); INSERT INTO t VALUES (1), (2), (3);");
        let rs = d
            .query(
                "SELECT v FROM t",
                vec!["t.v".into()],
                ExecLimits {
                    row_cap: 2,
                    timeout_ms: 1000,
                },
            )
            .unwrap();
        assert_eq!(rs.rows.len(), 2);
        assert!(rs.truncated);
        assert_eq!(rs.columns, vec!["t.v"]);
    }

    #[test]
    fn runaway_query_times_out() {
        let d = db("");
        let sql = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c";
        let err = d
            .query(
                sql,
                Vec::new(),
                ExecLimits {
                    row_cap: 10,
                    timeout_ms: 50,
                },
            )
            .unwrap_err();
        assert!(matches!(err, ExecError::Timeout { .. }), "{err}");
    }

    #[test]
    fn engine_error_carries_sql() {
        let d = db("");
        let err = d
            .query("SELECT * FROM nope", Vec::new(), ExecLimits::default())
            .unwrap_err();
        let ExecError::Engine { sql, message } = err else {
            panic!()
        };
        assert_eq!(sql, "SELECT * FROM nope");
        assert!(message.contains("no such table"));
    }
}
