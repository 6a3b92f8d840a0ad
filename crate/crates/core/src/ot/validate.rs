use std::fmt;

use super::tree::{AttrRef, Comparator, Literal, Node, NodePath, NonTerminal, Op, OperationTree};
use crate::schema::{Attribute, ColumnRef, ColumnType, SchemaGraph};

/// One broken rule, located by node path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: NodePath,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.path, self.rule, self.message)
    }
}

/// A relation visible at some node: its name in the tree and the table
/// that backs it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub table: String,
}

/// Relations whose columns are visible above a `T` node, in column order.
pub type Scope = Vec<Relation>;

/// Resolves `attr` against `scope`, returning the schema column.
pub fn resolve<'s>(
    schema: &'s SchemaGraph,
    scope: &[Relation],
    attr: &AttrRef,
) -> Option<(&'s Attribute, ColumnRef)> {
    let rel = scope.iter().find(|r| r.name == attr.relation)?;
    let col = schema.table(&rel.table)?.attribute(&attr.column)?;
    Some((col, ColumnRef::new(&rel.table, &attr.column)))
}

/// Checks grammar shape, arities, schema binding, attribute scoping and
/// literal typing. An empty result means the tree is valid.
pub fn validate(tree: &OperationTree, schema: &SchemaGraph) -> Vec<Violation> {
    let mut v = Validator {
        schema,
        violations: Vec::new(),
    };
    if let Some(bound) = &tree.schema_id {
        if *bound != schema.id {
            v.push(
                NodePath::root(),
                "schema-binding",
                format!("tree is bound to schema `{bound}`, not `{}`", schema.id),
            );
        }
    }
    if !tree.root.kind().is_question_root() {
        v.push(
            NodePath::root(),
            "root-kind",
            format!(
                "root must be a question-type kind, found {}",
                tree.root.kind()
            ),
        );
    }
    v.node(&tree.root, NodePath::root(), tree.root.kind().lhs());
    v.violations
}

/// Scope produced by a `T` subtree, or `None` when the subtree is invalid.
pub fn scope_of(node: &Node, schema: &SchemaGraph) -> Option<Scope> {
    let mut v = Validator {
        schema,
        violations: Vec::new(),
    };
    let scope = v.node(node, NodePath::root(), NonTerminal::T);
    if v.violations.is_empty() {
        scope
    } else {
        None
    }
}

struct Validator<'a> {
    schema: &'a SchemaGraph,
    violations: Vec<Violation>,
}

impl<'a> Validator<'a> {
    fn push(&mut self, path: NodePath, rule: &'static str, message: String) {
        self.violations.push(Violation {
            path,
            rule,
            message,
        });
    }

    fn attr(
        &mut self,
        path: &NodePath,
        scope: &[Relation],
        attr: &AttrRef,
    ) -> Option<&'a Attribute> {
        match resolve(self.schema, scope, attr) {
            Some((a, _)) => Some(a),
            None => {
                let known = scope.iter().any(|r| r.name == attr.relation);
                let message = if known {
                    format!("unknown attribute `{attr}`")
                } else {
                    format!("attribute `{attr}` is not produced by this subtree")
                };
                self.push(
                    path.clone(),
                    if known { "schema" } else { "scope" },
                    message,
                );
                None
            }
        }
    }

    fn numeric(&mut self, path: &NodePath, attr: &AttrRef, col: &Attribute) {
        if !col.column_type.is_numeric() {
            self.push(
                path.clone(),
                "type",
                format!("aggregation over non-numeric attribute `{attr}`"),
            );
        }
    }

    /// Validates `node` where non-terminal `expected` is being derived and
    /// returns the relations visible above it (empty for S/R nodes).
    fn node(&mut self, node: &Node, path: NodePath, expected: NonTerminal) -> Option<Scope> {
        let kind = node.kind();
        if kind.lhs() != expected {
            self.push(
                path.clone(),
                "grammar",
                format!("{kind} cannot be derived from {expected}"),
            );
        }
        if node.children.len() != kind.arity() {
            self.push(
                path.clone(),
                "arity",
                format!(
                    "{kind} expects {} children, found {}",
                    kind.arity(),
                    node.children.len()
                ),
            );
        }
        let rhs = kind.rhs();
        let child_scopes: Vec<Option<Scope>> = node
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let nt = rhs.get(i).copied().unwrap_or(NonTerminal::T);
                self.node(c, path.child(i), nt)
            })
            .collect();
        if node.children.len() != kind.arity() {
            return None;
        }
        let first = child_scopes.first().cloned().flatten();

        match &node.op {
            Op::GetData { table, alias } => {
                if self.schema.table(table).is_none() {
                    self.push(path, "schema", format!("unknown table `{table}`"));
                    return None;
                }
                Some(vec![Relation {
                    name: alias.clone().unwrap_or_else(|| table.clone()),
                    table: table.clone(),
                }])
            }
            Op::Selection {
                attribute,
                comparator,
                value,
            } => {
                let scope = first?;
                if let Some(col) = self.attr(&path, &scope, attribute) {
                    if let Err(msg) = check_literal(attribute, col.column_type, *comparator, value)
                    {
                        self.push(path, "type", msg);
                    }
                }
                Some(scope)
            }
            Op::Join {
                left_key,
                right_key,
            } => {
                let left = first?;
                let right = child_scopes[1].clone()?;
                if let Some(dup) = left.iter().find(|l| right.iter().any(|r| r.name == l.name)) {
                    self.push(
                        path.clone(),
                        "scope",
                        format!("relation `{}` appears on both sides of the join", dup.name),
                    );
                }
                let l = resolve(self.schema, &left, left_key);
                let r = resolve(self.schema, &right, right_key);
                match (l, r) {
                    (Some((_, lc)), Some((_, rc))) => {
                        if !self.schema.is_fk_pair(&lc, &rc) {
                            self.push(
                                path,
                                "join-key",
                                format!("{lc} = {rc} is not a declared foreign key"),
                            );
                        }
                    }
                    (l, r) => {
                        if l.is_none() {
                            self.push(
                                path.clone(),
                                "join-key",
                                format!("left key `{left_key}` is not produced by the left child"),
                            );
                        }
                        if r.is_none() {
                            self.push(
                                path,
                                "join-key",
                                format!(
                                    "right key `{right_key}` is not produced by the right child"
                                ),
                            );
                        }
                    }
                }
                Some(left.into_iter().chain(right).collect())
            }
            Op::Union | Op::Intersect | Op::Diff => {
                let left = first?;
                let right = child_scopes[1].clone()?;
                let (lp, rp) = (left.first()?, right.first()?);
                if lp != rp {
                    self.push(
                        path,
                        "set-op",
                        format!(
                            "{kind} operands differ in their primary relation: `{}` vs `{}`",
                            lp.name, rp.name
                        ),
                    );
                    return None;
                }
                Some(vec![lp.clone()])
            }
            Op::Distinct => Some(vec![first?.first()?.clone()]),
            Op::Min { attribute } | Op::Max { attribute } => {
                let scope = first?;
                self.attr(&path, &scope, attribute);
                Some(scope)
            }
            Op::GroupBy {
                variant,
                group_attribute,
                aggregation_attribute,
            } => {
                let scope = first?;
                if group_attribute == aggregation_attribute {
                    self.push(
                        path.clone(),
                        "group-by",
                        "group and aggregation attributes must differ".to_string(),
                    );
                }
                self.attr(&path, &scope, group_attribute);
                if let Some(col) = self.attr(&path, &scope, aggregation_attribute) {
                    if *variant != super::GroupVariant::Count {
                        self.numeric(&path, aggregation_attribute, col);
                    }
                }
                Some(Vec::new())
            }
            Op::Projection { attributes } => {
                let scope = first?;
                if attributes.is_empty() {
                    self.push(
                        path.clone(),
                        "projection",
                        "projection needs at least one attribute".into(),
                    );
                }
                for a in attributes {
                    self.attr(&path, &scope, a);
                }
                Some(Vec::new())
            }
            Op::Sum { attribute } | Op::Average { attribute } => {
                let scope = first?;
                if let Some(col) = self.attr(&path, &scope, attribute) {
                    self.numeric(&path, attribute, col);
                }
                Some(Vec::new())
            }
            Op::Count | Op::IsEmpty | Op::Done => {
                first?;
                Some(Vec::new())
            }
        }
    }
}

fn check_literal(
    attr: &AttrRef,
    ty: ColumnType,
    cmp: Comparator,
    value: &Literal,
) -> Result<(), String> {
    let ok = matches!(
        (ty, value),
        (ColumnType::Integer, Literal::Integer(_))
            | (ColumnType::Real, Literal::Integer(_) | Literal::Real(_))
            | (ColumnType::Text, Literal::Text(_))
            | (ColumnType::Boolean, Literal::Boolean(_))
            | (ColumnType::Date, Literal::Text(_) | Literal::Integer(_))
    );
    if !ok {
        let what = match ty {
            ColumnType::Integer | ColumnType::Real => "numeric",
            ColumnType::Text => "text",
            ColumnType::Boolean => "boolean",
            ColumnType::Date => "a date",
        };
        return Err(format!("value type mismatch: {} is {what}", attr.column));
    }
    if cmp == Comparator::Contains && ty != ColumnType::Text {
        return Err(format!(
            "`contains` needs a text attribute, `{attr}` is not"
        ));
    }
    if ty == ColumnType::Boolean && !matches!(cmp, Comparator::Eq | Comparator::Ne) {
        return Err(format!("boolean attribute `{attr}` only supports = and !="));
    }
    Ok(())
}

pub fn is_valid(tree: &OperationTree, schema: &SchemaGraph) -> bool {
    validate(tree, schema).is_empty()
}
