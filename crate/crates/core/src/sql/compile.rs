//! Operation tree → SQL.
//!
//! `T` subtrees compile to a flat block of `FROM ... JOIN ... ON ...` items
//! plus `WHERE` conjuncts. Operations that change row identity (`Distinct`,
//! the set operations) become derived tables whose columns are named
//! `"relation.column"`; argmin/argmax adds a conjunct comparing against a
//! scalar subquery over the same block. Every identifier is double-quoted,
//! so table names that collide with keywords (`cast`) are safe.

use thiserror::Error;

use crate::ot::validate::Relation;
use crate::ot::{
    AttrRef, Comparator, GroupVariant, Literal, Node, NodePath, Op, OperationKind, OperationTree,
};
use crate::schema::SchemaGraph;

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("unsupported node {kind} at {path}")]
    UnsupportedNode { kind: OperationKind, path: NodePath },
    #[error("cannot compile {path}: {message}")]
    Invalid { path: NodePath, message: String },
}

/// SQL text plus the names of the columns it returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledQuery {
    pub sql: String,
    pub columns: Vec<String>,
}

pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub fn render_literal(l: &Literal) -> String {
    match l {
        Literal::Integer(i) => i.to_string(),
        Literal::Real(r) => {
            let s = format!("{r:?}");
            if s.contains(['.', 'e', 'E']) || !r.is_finite() {
                s
            } else {
                format!("{s}.0")
            }
        }
        Literal::Text(s) => quote_text(s),
        Literal::Boolean(b) => if *b { "1" } else { "0" }.to_string(),
    }
}

fn like_pattern(s: &str) -> String {
    let mut out = String::from("%");
    for c in s.chars() {
        if matches!(c, '%' | '_' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('%');
    quote_text(&out)
}

fn predicate(expr: &str, cmp: Comparator, value: &Literal) -> String {
    match cmp {
        Comparator::Contains => {
            let text = match value {
                Literal::Text(s) => s.clone(),
                other => other.surface(),
            };
            format!("{expr} LIKE {} ESCAPE '\\'", like_pattern(&text))
        }
        Comparator::Ne => format!("{expr} <> {}", render_literal(value)),
        other => format!("{expr} {} {}", other.symbol(), render_literal(value)),
    }
}

#[derive(Debug, Clone)]
struct FromItem {
    sql: String,
    on: Vec<String>,
}

#[derive(Debug, Clone)]
struct RelCols {
    rel: Relation,
    /// (column name, SQL expression referencing it)
    cols: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct Block {
    items: Vec<FromItem>,
    conds: Vec<String>,
    scope: Vec<RelCols>,
}

impl Block {
    fn tail_clauses(&self) -> String {
        let mut s = String::from(" FROM ");
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                s.push_str(" JOIN ");
            }
            s.push_str(&item.sql);
            if !item.on.is_empty() {
                s.push_str(" ON ");
                s.push_str(&item.on.join(" AND "));
            }
        }
        if !self.conds.is_empty() {
            s.push_str(" WHERE ");
            s.push_str(&self.conds.join(" AND "));
        }
        s
    }

    fn expr(&self, attr: &AttrRef) -> Option<&str> {
        self.scope
            .iter()
            .find(|r| r.rel.name == attr.relation)?
            .cols
            .iter()
            .find(|(c, _)| *c == attr.column)
            .map(|(_, e)| e.as_str())
    }

    fn all_columns(&self) -> Vec<(String, String)> {
        self.scope
            .iter()
            .flat_map(|r| {
                r.cols
                    .iter()
                    .map(move |(c, e)| (format!("{}.{c}", r.rel.name), e.clone()))
            })
            .collect()
    }

    fn primary_columns(&self) -> Vec<(String, String)> {
        let r = &self.scope[0];
        r.cols
            .iter()
            .map(|(c, e)| (format!("{}.{c}", r.rel.name), e.clone()))
            .collect()
    }
}

/// Compiles a whole tree. The tree must be valid against `schema`.
pub fn compile(tree: &OperationTree, schema: &SchemaGraph) -> Result<CompiledQuery, CompileError> {
    compile_node(&tree.root, schema)
}

/// Compiles the subtree rooted at `node`. `T` subtrees return every visible
/// column as `"relation.column"`.
pub fn compile_node(node: &Node, schema: &SchemaGraph) -> Result<CompiledQuery, CompileError> {
    let mut c = Compiler { schema, derived: 0 };
    c.query(node, NodePath::root())
}

struct Compiler<'a> {
    schema: &'a SchemaGraph,
    derived: usize,
}

impl Compiler<'_> {
    fn invalid(path: &NodePath, message: impl Into<String>) -> CompileError {
        CompileError::Invalid {
            path: path.clone(),
            message: message.into(),
        }
    }

    fn child<'n>(node: &'n Node, i: usize, path: &NodePath) -> Result<&'n Node, CompileError> {
        node.children
            .get(i)
            .ok_or_else(|| Self::invalid(path, format!("{} is missing child {i}", node.kind())))
    }

    fn expr<'b>(
        block: &'b Block,
        attr: &AttrRef,
        path: &NodePath,
    ) -> Result<&'b str, CompileError> {
        block
            .expr(attr)
            .ok_or_else(|| Self::invalid(path, format!("attribute `{attr}` is not in scope")))
    }

    fn query(&mut self, node: &Node, path: NodePath) -> Result<CompiledQuery, CompileError> {
        let child_path = path.child(0);
        match &node.op {
            Op::Done => {
                let proj = Self::child(node, 0, &path)?;
                if proj.kind() != OperationKind::Projection {
                    return Err(Self::invalid(&path, "Done expects a Projection child"));
                }
                self.query(proj, child_path)
            }
            Op::Projection { attributes } => {
                let b = self.block(Self::child(node, 0, &path)?, child_path)?;
                let exprs = attributes
                    .iter()
                    .map(|a| Self::expr(&b, a, &path).map(str::to_string))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CompiledQuery {
                    sql: format!("SELECT {}{}", exprs.join(", "), b.tail_clauses()),
                    columns: attributes.iter().map(ToString::to_string).collect(),
                })
            }
            Op::Count => {
                let b = self.block(Self::child(node, 0, &path)?, child_path)?;
                Ok(CompiledQuery {
                    sql: format!("SELECT COUNT(*){}", b.tail_clauses()),
                    columns: vec!["count".into()],
                })
            }
            Op::Sum { attribute } | Op::Average { attribute } => {
                let b = self.block(Self::child(node, 0, &path)?, child_path)?;
                let f = if node.kind() == OperationKind::Sum {
                    "SUM"
                } else {
                    "AVG"
                };
                let e = Self::expr(&b, attribute, &path)?;
                Ok(CompiledQuery {
                    sql: format!("SELECT {f}({e}){}", b.tail_clauses()),
                    columns: vec![format!("{}({attribute})", f.to_ascii_lowercase())],
                })
            }
            Op::IsEmpty => {
                let b = self.block(Self::child(node, 0, &path)?, child_path)?;
                Ok(CompiledQuery {
                    sql: format!("SELECT NOT EXISTS (SELECT 1{})", b.tail_clauses()),
                    columns: vec!["is_empty".into()],
                })
            }
            Op::GroupBy {
                variant,
                group_attribute,
                aggregation_attribute,
            } => {
                let b = self.block(Self::child(node, 0, &path)?, child_path)?;
                let g = Self::expr(&b, group_attribute, &path)?;
                let a = Self::expr(&b, aggregation_attribute, &path)?;
                let f = match variant {
                    GroupVariant::Avg => "AVG",
                    GroupVariant::Sum => "SUM",
                    GroupVariant::Count => "COUNT",
                };
                Ok(CompiledQuery {
                    sql: format!("SELECT {g}, {f}({a}){} GROUP BY {g}", b.tail_clauses()),
                    columns: vec![
                        group_attribute.to_string(),
                        format!("{}({aggregation_attribute})", variant.name()),
                    ],
                })
            }
            _ => {
                let b = self.block(node, path)?;
                let cols = b.all_columns();
                let select: Vec<String> = cols.iter().map(|(_, e)| e.clone()).collect();
                Ok(CompiledQuery {
                    sql: format!("SELECT {}{}", select.join(", "), b.tail_clauses()),
                    columns: cols.into_iter().map(|(n, _)| n).collect(),
                })
            }
        }
    }

    fn block(&mut self, node: &Node, path: NodePath) -> Result<Block, CompileError> {
        match &node.op {
            Op::GetData { table, alias } => {
                let t = self
                    .schema
                    .table(table)
                    .ok_or_else(|| Self::invalid(&path, format!("unknown table `{table}`")))?;
                let name = alias.clone().unwrap_or_else(|| table.clone());
                let sql = match alias {
                    Some(a) => format!("{} AS {}", quote_ident(table), quote_ident(a)),
                    None => quote_ident(table),
                };
                let q = quote_ident(&name);
                Ok(Block {
                    items: vec![FromItem {
                        sql,
                        on: Vec::new(),
                    }],
                    conds: Vec::new(),
                    scope: vec![RelCols {
                        rel: Relation {
                            name,
                            table: table.clone(),
                        },
                        cols: t
                            .attributes
                            .iter()
                            .map(|a| (a.name.clone(), format!("{q}.{}", quote_ident(&a.name))))
                            .collect(),
                    }],
                })
            }
            Op::Selection {
                attribute,
                comparator,
                value,
            } => {
                let mut b = self.block(Self::child(node, 0, &path)?, path.child(0))?;
                let e = Self::expr(&b, attribute, &path)?.to_string();
                b.conds.push(predicate(&e, *comparator, value));
                Ok(b)
            }
            Op::Join {
                left_key,
                right_key,
            } => {
                let mut left = self.block(Self::child(node, 0, &path)?, path.child(0))?;
                let right = self.block(Self::child(node, 1, &path)?, path.child(1))?;
                let l = Self::expr(&left, left_key, &path)?.to_string();
                let r = Self::expr(&right, right_key, &path)?.to_string();
                let mut items = right.items;
                items
                    .last_mut()
                    .expect("blocks have at least one item")
                    .on
                    .push(format!("{l} = {r}"));
                left.items.extend(items);
                left.conds.extend(right.conds);
                left.scope.extend(right.scope);
                Ok(left)
            }
            Op::Union | Op::Intersect | Op::Diff => {
                let left = self.block(Self::child(node, 0, &path)?, path.child(0))?;
                let right = self.block(Self::child(node, 1, &path)?, path.child(1))?;
                if left.scope[0].rel != right.scope[0].rel {
                    return Err(Self::invalid(
                        &path,
                        "set operands have different primary relations",
                    ));
                }
                let keyword = match node.kind() {
                    OperationKind::Union => "UNION",
                    OperationKind::Intersect => "INTERSECT",
                    _ => "EXCEPT",
                };
                let lhs = Self::select_primary(&left, "", true);
                let rhs = Self::select_primary(&right, "", false);
                Ok(self.derived(format!("{lhs} {keyword} {rhs}"), &left))
            }
            Op::Distinct => {
                let child = self.block(Self::child(node, 0, &path)?, path.child(0))?;
                let inner = Self::select_primary(&child, "DISTINCT ", true);
                Ok(self.derived(inner, &child))
            }
            Op::Min { attribute } | Op::Max { attribute } => {
                let mut b = self.block(Self::child(node, 0, &path)?, path.child(0))?;
                let e = Self::expr(&b, attribute, &path)?.to_string();
                let f = if node.kind() == OperationKind::Min {
                    "MIN"
                } else {
                    "MAX"
                };
                let sub = format!("(SELECT {f}({e}){})", b.tail_clauses());
                b.conds.push(format!("{e} = {sub}"));
                Ok(b)
            }
            _ => Err(CompileError::UnsupportedNode {
                kind: node.kind(),
                path,
            }),
        }
    }

    fn select_primary(b: &Block, modifier: &str, named: bool) -> String {
        let cols: Vec<String> = b
            .primary_columns()
            .into_iter()
            .map(|(n, e)| {
                if named {
                    format!("{e} AS {}", quote_ident(&n))
                } else {
                    e
                }
            })
            .collect();
        format!("SELECT {modifier}{}{}", cols.join(", "), b.tail_clauses())
    }

    /// Wraps a query producing the primary relation of `like` into a derived
    /// table, keeping that relation's name for attribute lookup.
    fn derived(&mut self, inner: String, like: &Block) -> Block {
        let alias = format!("d{}", self.derived);
        self.derived += 1;
        let rel = like.scope[0].rel.clone();
        let qa = quote_ident(&alias);
        let cols = like.scope[0]
            .cols
            .iter()
            .map(|(c, _)| {
                (
                    c.clone(),
                    format!("{qa}.{}", quote_ident(&format!("{}.{c}", rel.name))),
                )
            })
            .collect();
        Block {
            items: vec![FromItem {
                sql: format!("({inner}) AS {qa}"),
                on: Vec::new(),
            }],
            conds: Vec::new(),
            scope: vec![RelCols { rel, cols }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(render_literal(&Literal::Text("O'Neil".into())), "'O''Neil'");
        assert_eq!(render_literal(&Literal::Real(2.0)), "2.0");
        assert_eq!(render_literal(&Literal::Real(1.99)), "1.99");
        assert_eq!(render_literal(&Literal::Boolean(true)), "1");
        assert_eq!(
            predicate(
                "\"t\".\"c\"",
                Comparator::Contains,
                &Literal::Text("50%_off".into())
            ),
            "\"t\".\"c\" LIKE '%50\\%\\_off%' ESCAPE '\\'"
        );
    }
}
