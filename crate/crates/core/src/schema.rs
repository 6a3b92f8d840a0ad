//! Relational schema as an entity-relationship graph.
//!
//! Tables are vertices and declared foreign keys are edges. Join paths are
//! walks over the edges that never reuse an edge; a table may be revisited
//! (self-relationships such as `employee.reports_to`).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("table `{0}` has no columns")]
    EmptyTable(String),
    #[error("foreign key {from} -> {to} references missing column `{missing}`")]
    DanglingForeignKey {
        from: String,
        to: String,
        missing: String,
    },
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("join path length must be at least 1")]
    ZeroPathLength,
}

/// Scalar column types; source-specific declared types map onto these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
    Text,
    Boolean,
    Date,
}

impl ColumnType {
    /// Maps a declared SQL column type onto the five scalar types, using
    /// SQLite's affinity rules with date and boolean carved out first.
    ///
    /// | declared type contains        | maps to   |
    /// |-------------------------------|-----------|
    /// | `BOOL`                        | boolean   |
    /// | `DATE`, `TIME`                | date      |
    /// | `INT`                         | integer   |
    /// | `CHAR`, `CLOB`, `TEXT`        | text      |
    /// | `REAL`, `FLOA`, `DOUB`, `NUM`, `DEC` | real |
    /// | anything else (incl. empty)   | text      |
    pub fn from_declared(declared: &str) -> ColumnType {
        let d = declared.to_ascii_uppercase();
        if d.contains("BOOL") {
            ColumnType::Boolean
        } else if d.contains("DATE") || d.contains("TIME") {
            ColumnType::Date
        } else if d.contains("INT") {
            ColumnType::Integer
        } else if d.contains("CHAR") || d.contains("CLOB") || d.contains("TEXT") {
            ColumnType::Text
        } else if ["REAL", "FLOA", "DOUB", "NUM", "DEC"]
            .iter()
            .any(|p| d.contains(p))
        {
            ColumnType::Real
        } else {
            ColumnType::Text
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Integer | ColumnType::Real)
    }

    /// Types with a meaningful order for `<`/`>` and argmin/argmax.
    pub fn is_ordered(self) -> bool {
        matches!(
            self,
            ColumnType::Integer | ColumnType::Real | ColumnType::Date
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub column_type: ColumnType,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub primary_key: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, column_type: ColumnType) -> Self {
        Attribute {
            name: name.into(),
            column_type,
            primary_key: false,
        }
    }

    pub fn key(name: impl Into<String>, column_type: ColumnType) -> Self {
        Attribute {
            primary_key: true,
            ..Attribute::new(name, column_type)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub attributes: Vec<Attribute>,
    #[serde(default)]
    pub is_bridge: bool,
}

impl Table {
    pub fn new(name: impl Into<String>, attributes: Vec<Attribute>) -> Self {
        Table {
            name: name.into(),
            attributes,
            is_bridge: false,
        }
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// `table.column` pointer used by foreign keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            table: table.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

impl FromStr for ColumnRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((t, c)) if !t.is_empty() && !c.is_empty() => Ok(ColumnRef::new(t, c)),
            _ => Err(format!("`{s}` is not of the form table.column")),
        }
    }
}

impl TryFrom<String> for ColumnRef {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ColumnRef> for String {
    fn from(c: ColumnRef) -> String {
        c.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnRef,
    pub to: ColumnRef,
}

impl ForeignKey {
    pub fn new(from: ColumnRef, to: ColumnRef) -> Self {
        ForeignKey { from, to }
    }
}

/// Sidecar that pins which tables are bridge (relationship) tables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeOverrides {
    pub bridge_tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaGraph {
    pub id: String,
    pub tables: Vec<Table>,
    pub fk_edges: Vec<ForeignKey>,
}

impl SchemaGraph {
    /// Builds and checks a schema. Bridge flags are set heuristically; see
    /// [`SchemaGraph::detect_bridges`].
    pub fn new(
        id: impl Into<String>,
        tables: Vec<Table>,
        fk_edges: Vec<ForeignKey>,
    ) -> Result<Self, SchemaError> {
        let mut seen = BTreeSet::new();
        for t in &tables {
            if !seen.insert(t.name.as_str()) {
                return Err(SchemaError::DuplicateTable(t.name.clone()));
            }
            if t.attributes.is_empty() {
                return Err(SchemaError::EmptyTable(t.name.clone()));
            }
        }
        let mut graph = SchemaGraph {
            id: id.into(),
            tables,
            fk_edges,
        };
        for fk in &graph.fk_edges {
            for end in [&fk.from, &fk.to] {
                if graph.column(end).is_none() {
                    return Err(SchemaError::DanglingForeignKey {
                        from: fk.from.to_string(),
                        to: fk.to.to_string(),
                        missing: end.to_string(),
                    });
                }
            }
        }
        graph.detect_bridges();
        Ok(graph)
    }

    /// A table is a bridge when it links at least two other tables and
    /// either carries nothing but key columns, or its primary key consists
    /// solely of foreign-key columns.
    pub fn detect_bridges(&mut self) {
        let flags: Vec<bool> = self
            .tables
            .iter()
            .map(|t| {
                let fk_cols: BTreeSet<&str> = self
                    .fk_edges
                    .iter()
                    .filter(|fk| fk.from.table == t.name)
                    .map(|fk| fk.from.column.as_str())
                    .collect();
                if fk_cols.len() < 2 {
                    return false;
                }
                let only_keys = t
                    .attributes
                    .iter()
                    .all(|a| a.primary_key || fk_cols.contains(a.name.as_str()));
                let pk: Vec<&Attribute> = t.attributes.iter().filter(|a| a.primary_key).collect();
                let pk_of_fks =
                    pk.len() >= 2 && pk.iter().all(|a| fk_cols.contains(a.name.as_str()));
                only_keys || pk_of_fks
            })
            .collect();
        for (t, flag) in self.tables.iter_mut().zip(flags) {
            t.is_bridge = flag;
        }
    }

    /// Replaces the heuristic bridge flags with an explicit list.
    pub fn apply_bridge_overrides(
        &mut self,
        overrides: &BridgeOverrides,
    ) -> Result<(), SchemaError> {
        for name in &overrides.bridge_tables {
            if self.table(name).is_none() {
                return Err(SchemaError::UnknownTable(name.clone()));
            }
        }
        for t in &mut self.tables {
            t.is_bridge = overrides.bridge_tables.contains(&t.name);
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn column(&self, c: &ColumnRef) -> Option<&Attribute> {
        self.table(&c.table)?.attribute(&c.column)
    }

    pub fn attribute_count(&self) -> usize {
        self.tables.iter().map(|t| t.attributes.len()).sum()
    }

    /// Primary-key or foreign-key column.
    pub fn is_key_column(&self, table: &str, column: &str) -> bool {
        let pk = self
            .table(table)
            .and_then(|t| t.attribute(column))
            .is_some_and(|a| a.primary_key);
        pk || self.fk_edges.iter().any(|fk| {
            (fk.from.table == table && fk.from.column == column)
                || (fk.to.table == table && fk.to.column == column)
        })
    }

    /// Descriptive columns: everything that is not a key.
    pub fn non_key_attributes(&self, table: &str) -> Vec<&Attribute> {
        self.table(table)
            .map(|t| {
                t.attributes
                    .iter()
                    .filter(|a| !self.is_key_column(table, &a.name))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Whether `a = b` (in either direction) is a declared foreign key.
    pub fn is_fk_pair(&self, a: &ColumnRef, b: &ColumnRef) -> bool {
        self.fk_edges
            .iter()
            .any(|fk| (fk.from == *a && fk.to == *b) || (fk.from == *b && fk.to == *a))
    }

    /// Edges incident to `table`, oriented so that the left column lies on
    /// `table`. A self-loop yields both orientations.
    pub fn hops_from(&self, table: &str) -> Vec<Hop> {
        let mut out = Vec::new();
        for (i, fk) in self.fk_edges.iter().enumerate() {
            if fk.from.table == table {
                out.push(Hop {
                    edge: i,
                    left: fk.from.clone(),
                    right: fk.to.clone(),
                });
            }
            if fk.to.table == table {
                out.push(Hop {
                    edge: i,
                    left: fk.to.clone(),
                    right: fk.from.clone(),
                });
            }
        }
        out
    }
}

/// One traversed foreign-key edge; `left` is on the table already on the
/// path and `right` on the table the hop leads to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hop {
    pub edge: usize,
    pub left: ColumnRef,
    pub right: ColumnRef,
}

/// Sequence of tables joined by foreign keys, starting at the result table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinPath {
    pub tables: Vec<String>,
    pub hops: Vec<Hop>,
}

impl JoinPath {
    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// All paths of exactly `length` tables starting at `result_table` that use
/// each foreign-key edge at most once, ordered lexicographically by table
/// sequence (ties broken by the hops).
pub fn enumerate_join_paths(
    schema: &SchemaGraph,
    result_table: &str,
    length: usize,
) -> Result<Vec<JoinPath>, SchemaError> {
    if schema.table(result_table).is_none() {
        return Err(SchemaError::UnknownTable(result_table.to_string()));
    }
    if length == 0 {
        return Err(SchemaError::ZeroPathLength);
    }
    let mut out = Vec::new();
    let mut tables = vec![result_table.to_string()];
    let mut hops = Vec::new();
    let mut used = vec![false; schema.fk_edges.len()];
    extend(schema, length, &mut tables, &mut hops, &mut used, &mut out);
    out.sort();
    Ok(out)
}

fn extend(
    schema: &SchemaGraph,
    length: usize,
    tables: &mut Vec<String>,
    hops: &mut Vec<Hop>,
    used: &mut [bool],
    out: &mut Vec<JoinPath>,
) {
    if tables.len() == length {
        out.push(JoinPath {
            tables: tables.clone(),
            hops: hops.clone(),
        });
        return;
    }
    let last = tables.last().expect("path is never empty").clone();
    for hop in schema.hops_from(&last) {
        if used[hop.edge] {
            continue;
        }
        used[hop.edge] = true;
        tables.push(hop.right.table.clone());
        hops.push(hop);
        extend(schema, length, tables, hops, used, out);
        let hop = hops.pop().expect("pushed above");
        tables.pop();
        used[hop.edge] = false;
    }
}
