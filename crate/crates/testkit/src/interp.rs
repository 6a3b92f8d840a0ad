//! Row-at-a-time reference evaluator for operation trees.
//!
//! Written directly from the operation semantics and sharing no code with
//! the SQL compiler, so the two can be checked against each other. Tables
//! are loaded into memory once; every operation is a plain loop over rows.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use otforge_core::{
    AttrRef, Comparator, GroupVariant, Literal, Node, Op, OperationTree, ResultSet, Scalar,
};
use rusqlite::types::ValueRef;
use rusqlite::Connection;

#[derive(Debug, Clone)]
pub struct TableData {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Scalar>>,
}

/// All tables of a database, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct Tables(pub BTreeMap<String, TableData>);

impl Tables {
    pub fn load(conn: &Connection) -> rusqlite::Result<Self> {
        let names: Vec<String> = conn
            .prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%'",
            )?
            .query_map([], |r| r.get(0))?
            .collect::<Result<_, _>>()?;
        let mut out = BTreeMap::new();
        for name in names {
            let mut stmt = conn.prepare(&format!("SELECT * FROM \"{name}\""))?;
            let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
            let n = columns.len();
            let rows = stmt
                .query_map([], |r| {
                    (0..n)
                        .map(|i| r.get_ref(i).map(cell))
                        .collect::<Result<Vec<_>, _>>()
                })?
                .collect::<Result<Vec<_>, _>>()?;
            out.insert(name, TableData { columns, rows });
        }
        Ok(Tables(out))
    }
}

fn cell(v: ValueRef<'_>) -> Scalar {
    match v {
        ValueRef::Null => Scalar::Null,
        ValueRef::Integer(i) => Scalar::Integer(i),
        ValueRef::Real(r) => Scalar::Real(r),
        ValueRef::Text(t) => Scalar::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Scalar::Blob(b.to_vec()),
    }
}

/// An intermediate relation: named column groups and flat rows.
#[derive(Debug, Clone)]
struct Rel {
    /// (relation name, column names) in row order.
    groups: Vec<(String, Vec<String>)>,
    rows: Vec<Vec<Scalar>>,
}

impl Rel {
    fn index(&self, a: &AttrRef) -> usize {
        let mut offset = 0;
        for (name, cols) in &self.groups {
            if *name == a.relation {
                if let Some(i) = cols.iter().position(|c| *c == a.column) {
                    return offset + i;
                }
            }
            offset += cols.len();
        }
        panic!("attribute {a} not visible")
    }

    fn names(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|(r, cols)| cols.iter().map(move |c| format!("{r}.{c}")))
            .collect()
    }

    /// The first relation's columns, deduplicated.
    fn primary_set(&self) -> Rel {
        let (name, cols) = self.groups[0].clone();
        let width = cols.len();
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        for r in &self.rows {
            let p = r[..width].to_vec();
            if !rows.iter().any(|x| same_row(x, &p)) {
                rows.push(p);
            }
        }
        Rel {
            groups: vec![(name, cols)],
            rows,
        }
    }
}

fn num(s: &Scalar) -> Option<f64> {
    match s {
        Scalar::Integer(i) => Some(*i as f64),
        Scalar::Real(r) => Some(*r),
        _ => None,
    }
}

/// Total order within a column: numbers numerically, text bytewise.
fn order(a: &Scalar, b: &Scalar) -> Option<Ordering> {
    match (a, b) {
        (Scalar::Null, _) | (_, Scalar::Null) => None,
        (Scalar::Text(x), Scalar::Text(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        _ => num(a)?.partial_cmp(&num(b)?),
    }
}

/// Row identity for deduplication: NULLs equal each other.
fn same_cell(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Null, Scalar::Null) => true,
        _ => order(a, b) == Some(Ordering::Equal) || a == b,
    }
}

fn same_row(a: &[Scalar], b: &[Scalar]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same_cell(x, y))
}

fn literal(l: &Literal) -> Scalar {
    match l {
        Literal::Integer(i) => Scalar::Integer(*i),
        Literal::Real(r) => Scalar::Real(*r),
        Literal::Text(t) => Scalar::Text(t.clone()),
        Literal::Boolean(b) => Scalar::Integer(*b as i64),
    }
}

fn matches(v: &Scalar, cmp: Comparator, lit: &Literal) -> bool {
    if v.is_null() {
        return false;
    }
    if cmp == Comparator::Contains {
        let (Scalar::Text(s), Literal::Text(needle)) = (v, lit) else {
            return false;
        };
        return s
            .to_ascii_lowercase()
            .contains(&needle.to_ascii_lowercase());
    }
    let Some(o) = order(v, &literal(lit)) else {
        return false;
    };
    match cmp {
        Comparator::Eq => o == Ordering::Equal,
        Comparator::Ne => o != Ordering::Equal,
        Comparator::Lt => o == Ordering::Less,
        Comparator::Le => o != Ordering::Greater,
        Comparator::Gt => o == Ordering::Greater,
        Comparator::Ge => o != Ordering::Less,
        Comparator::Contains => unreachable!(),
    }
}

fn sum(values: &[&Scalar]) -> Scalar {
    let present: Vec<&&Scalar> = values.iter().filter(|v| !v.is_null()).collect();
    if present.is_empty() {
        return Scalar::Null;
    }
    if present.iter().all(|v| matches!(v, Scalar::Integer(_))) {
        Scalar::Integer(
            present
                .iter()
                .map(|v| if let Scalar::Integer(i) = v { *i } else { 0 })
                .sum(),
        )
    } else {
        Scalar::Real(present.iter().filter_map(|v| num(v)).sum())
    }
}

fn avg(values: &[&Scalar]) -> Scalar {
    let present: Vec<f64> = values.iter().filter_map(|v| num(v)).collect();
    if present.is_empty() {
        Scalar::Null
    } else {
        Scalar::Real(present.iter().sum::<f64>() / present.len() as f64)
    }
}

fn table_expr(node: &Node, tables: &Tables) -> Rel {
    let child = |i: usize| table_expr(&node.children[i], tables);
    match &node.op {
        Op::GetData { table, alias } => {
            let t = &tables.0[table];
            Rel {
                groups: vec![(
                    alias.clone().unwrap_or_else(|| table.clone()),
                    t.columns.clone(),
                )],
                rows: t.rows.clone(),
            }
        }
        Op::Selection {
            attribute,
            comparator,
            value,
        } => {
            let mut r = child(0);
            let i = r.index(attribute);
            r.rows.retain(|row| matches(&row[i], *comparator, value));
            r
        }
        Op::Join {
            left_key,
            right_key,
        } => {
            let (l, r) = (child(0), child(1));
            let (li, ri) = (l.index(left_key), r.index(right_key));
            let mut rows = Vec::new();
            for a in &l.rows {
                for b in &r.rows {
                    if order(&a[li], &b[ri]) == Some(Ordering::Equal) {
                        rows.push(a.iter().chain(b.iter()).cloned().collect());
                    }
                }
            }
            let mut groups = l.groups;
            groups.extend(r.groups);
            Rel { groups, rows }
        }
        Op::Union | Op::Intersect | Op::Diff => {
            let (l, r) = (child(0).primary_set(), child(1).primary_set());
            let in_r = |row: &Vec<Scalar>| r.rows.iter().any(|x| same_row(x, row));
            let mut rows: Vec<Vec<Scalar>> = match node.op {
                Op::Union => l.rows.iter().chain(r.rows.iter()).cloned().collect(),
                Op::Intersect => l.rows.iter().filter(|x| in_r(x)).cloned().collect(),
                _ => l.rows.iter().filter(|x| !in_r(x)).cloned().collect(),
            };
            let mut dedup: Vec<Vec<Scalar>> = Vec::new();
            for row in rows.drain(..) {
                if !dedup.iter().any(|x| same_row(x, &row)) {
                    dedup.push(row);
                }
            }
            Rel {
                groups: l.groups,
                rows: dedup,
            }
        }
        Op::Min { attribute } | Op::Max { attribute } => {
            let mut r = child(0);
            let i = r.index(attribute);
            let want = if matches!(node.op, Op::Min { .. }) {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            let mut best: Option<Scalar> = None;
            for row in &r.rows {
                let v = &row[i];
                if v.is_null() {
                    continue;
                }
                if best.as_ref().is_none_or(|b| order(v, b) == Some(want)) {
                    best = Some(v.clone());
                }
            }
            match best {
                Some(b) => r
                    .rows
                    .retain(|row| order(&row[i], &b) == Some(Ordering::Equal)),
                None => r.rows.clear(),
            }
            r
        }
        Op::Distinct => child(0).primary_set(),
        other => panic!("{} is not a table expression", other.kind()),
    }
}

/// Evaluates a subtree rooted at any node.
pub fn evaluate_node(node: &Node, tables: &Tables) -> ResultSet {
    let child = || table_expr(&node.children[0], tables);
    match &node.op {
        Op::Done => evaluate_node(&node.children[0], tables),
        Op::Projection { attributes } => {
            let r = child();
            let idx: Vec<usize> = attributes.iter().map(|a| r.index(a)).collect();
            ResultSet::new(
                attributes.iter().map(ToString::to_string).collect(),
                r.rows
                    .iter()
                    .map(|row| idx.iter().map(|&i| row[i].clone()).collect())
                    .collect(),
            )
        }
        Op::Count => ResultSet::new(
            vec!["count".into()],
            vec![vec![Scalar::Integer(child().rows.len() as i64)]],
        ),
        Op::Sum { attribute } | Op::Average { attribute } => {
            let r = child();
            let i = r.index(attribute);
            let vals: Vec<&Scalar> = r.rows.iter().map(|row| &row[i]).collect();
            let v = if matches!(node.op, Op::Sum { .. }) {
                sum(&vals)
            } else {
                avg(&vals)
            };
            ResultSet::new(vec!["aggregate".into()], vec![vec![v]])
        }
        Op::IsEmpty => ResultSet::new(
            vec!["is_empty".into()],
            vec![vec![Scalar::Integer(child().rows.is_empty() as i64)]],
        ),
        Op::GroupBy {
            variant,
            group_attribute,
            aggregation_attribute,
        } => {
            let r = child();
            let (gi, ai) = (r.index(group_attribute), r.index(aggregation_attribute));
            let mut groups: Vec<(Scalar, Vec<&Scalar>)> = Vec::new();
            for row in &r.rows {
                match groups.iter_mut().find(|(k, _)| same_cell(k, &row[gi])) {
                    Some((_, vals)) => vals.push(&row[ai]),
                    None => groups.push((row[gi].clone(), vec![&row[ai]])),
                }
            }
            let rows = groups
                .into_iter()
                .map(|(k, vals)| {
                    let v = match variant {
                        GroupVariant::Count => {
                            Scalar::Integer(vals.iter().filter(|v| !v.is_null()).count() as i64)
                        }
                        GroupVariant::Sum => sum(&vals),
                        GroupVariant::Avg => avg(&vals),
                    };
                    vec![k, v]
                })
                .collect();
            ResultSet::new(vec!["group".into(), "aggregate".into()], rows)
        }
        _ => {
            let r = table_expr(node, tables);
            ResultSet::new(r.names(), r.rows)
        }
    }
}

pub fn evaluate(tree: &OperationTree, tables: &Tables) -> ResultSet {
    evaluate_node(&tree.root, tables)
}
