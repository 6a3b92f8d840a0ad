use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// The sixteen operation kinds an [`Node`] can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperationKind {
    GetData,
    Selection,
    Join,
    Union,
    Intersect,
    Diff,
    Min,
    Max,
    GroupBy,
    Projection,
    Distinct,
    Count,
    Sum,
    Average,
    IsEmpty,
    Done,
}

/// Grammar non-terminals: `S` (question), `R` (result table) and `T`
/// (intermediate table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonTerminal {
    S,
    R,
    T,
}

impl fmt::Display for NonTerminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonTerminal::S => "S",
            NonTerminal::R => "R",
            NonTerminal::T => "T",
        })
    }
}

impl OperationKind {
    pub const ALL: [OperationKind; 16] = [
        OperationKind::GetData,
        OperationKind::Selection,
        OperationKind::Join,
        OperationKind::Union,
        OperationKind::Intersect,
        OperationKind::Diff,
        OperationKind::Min,
        OperationKind::Max,
        OperationKind::GroupBy,
        OperationKind::Projection,
        OperationKind::Distinct,
        OperationKind::Count,
        OperationKind::Sum,
        OperationKind::Average,
        OperationKind::IsEmpty,
        OperationKind::Done,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperationKind::GetData => "GetData",
            OperationKind::Selection => "Selection",
            OperationKind::Join => "Join",
            OperationKind::Union => "Union",
            OperationKind::Intersect => "Intersect",
            OperationKind::Diff => "Diff",
            OperationKind::Min => "Min",
            OperationKind::Max => "Max",
            OperationKind::GroupBy => "GroupBy",
            OperationKind::Projection => "Projection",
            OperationKind::Distinct => "Distinct",
            OperationKind::Count => "Count",
            OperationKind::Sum => "Sum",
            OperationKind::Average => "Average",
            OperationKind::IsEmpty => "IsEmpty",
            OperationKind::Done => "Done",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            OperationKind::GetData => 0,
            OperationKind::Join
            | OperationKind::Union
            | OperationKind::Intersect
            | OperationKind::Diff => 2,
            _ => 1,
        }
    }

    /// The non-terminal this kind is derived from.
    pub fn lhs(self) -> NonTerminal {
        match self {
            OperationKind::Done
            | OperationKind::Count
            | OperationKind::Sum
            | OperationKind::Average
            | OperationKind::IsEmpty
            | OperationKind::GroupBy => NonTerminal::S,
            OperationKind::Projection => NonTerminal::R,
            _ => NonTerminal::T,
        }
    }

    /// Non-terminals expected for the children, left to right.
    pub fn rhs(self) -> &'static [NonTerminal] {
        match self {
            OperationKind::Done => &[NonTerminal::R],
            OperationKind::GetData => &[],
            OperationKind::Join
            | OperationKind::Union
            | OperationKind::Intersect
            | OperationKind::Diff => &[NonTerminal::T, NonTerminal::T],
            _ => &[NonTerminal::T],
        }
    }

    pub fn is_question_root(self) -> bool {
        self.lhs() == NonTerminal::S
    }

    pub fn is_set_op(self) -> bool {
        matches!(
            self,
            OperationKind::Union | OperationKind::Intersect | OperationKind::Diff
        )
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperationKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown operation kind `{s}`"))
    }
}

impl serde::Serialize for OperationKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for OperationKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Qualified attribute reference `relation.column`.
///
/// The relation is the table name, or the alias of a `GetData` node when a
/// table occurs more than once in a tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrRef {
    pub relation: String,
    pub column: String,
}

impl AttrRef {
    pub fn new(relation: impl Into<String>, column: impl Into<String>) -> Self {
        AttrRef {
            relation: relation.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.column)
    }
}

impl FromStr for AttrRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((rel, col)) if !rel.is_empty() && !col.is_empty() => Ok(AttrRef::new(rel, col)),
            _ => Err(format!("attribute `{s}` is not qualified as table.column")),
        }
    }
}

/// Selection comparators. `Contains` compiles to `LIKE '%value%'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl Comparator {
    pub const ORDERING: [Comparator; 6] = [
        Comparator::Eq,
        Comparator::Ne,
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Contains => "contains",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "=" => Comparator::Eq,
            "!=" | "<>" | "≠" => Comparator::Ne,
            "<" => Comparator::Lt,
            "<=" | "≤" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" | "≥" => Comparator::Ge,
            "contains" => Comparator::Contains,
            other => return Err(format!("unknown comparator `{other}`")),
        })
    }
}

/// Aggregate applied per group by a `GroupBy` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupVariant {
    Avg,
    Sum,
    Count,
}

impl GroupVariant {
    pub const ALL: [GroupVariant; 3] = [GroupVariant::Avg, GroupVariant::Sum, GroupVariant::Count];

    pub fn name(self) -> &'static str {
        match self {
            GroupVariant::Avg => "avg",
            GroupVariant::Sum => "sum",
            GroupVariant::Count => "count",
        }
    }
}

impl FromStr for GroupVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avg" => Ok(GroupVariant::Avg),
            "sum" => Ok(GroupVariant::Sum),
            "count" => Ok(GroupVariant::Count),
            other => Err(format!("unknown group-by variant `{other}`")),
        }
    }
}

/// Constant in a `Selection` predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(i64),
    Real(f64),
    Text(String),
    Boolean(bool),
}

impl Literal {
    /// Plain rendering used for display and for matching against question
    /// text.
    pub fn surface(&self) -> String {
        match self {
            Literal::Integer(v) => v.to_string(),
            Literal::Real(v) => v.to_string(),
            Literal::Text(s) => s.clone(),
            Literal::Boolean(b) => b.to_string(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Text(s) => write!(f, "'{s}'"),
            other => f.write_str(&other.surface()),
        }
    }
}

/// An operation together with its arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    GetData {
        table: String,
        alias: Option<String>,
    },
    Selection {
        attribute: AttrRef,
        comparator: Comparator,
        value: Literal,
    },
    Join {
        left_key: AttrRef,
        right_key: AttrRef,
    },
    Union,
    Intersect,
    Diff,
    /// Rows of the child attaining the minimum of `attribute` (all ties).
    Min {
        attribute: AttrRef,
    },
    /// Rows of the child attaining the maximum of `attribute` (all ties).
    Max {
        attribute: AttrRef,
    },
    GroupBy {
        variant: GroupVariant,
        group_attribute: AttrRef,
        aggregation_attribute: AttrRef,
    },
    Projection {
        attributes: Vec<AttrRef>,
    },
    Distinct,
    Count,
    Sum {
        attribute: AttrRef,
    },
    Average {
        attribute: AttrRef,
    },
    IsEmpty,
    Done,
}

impl Op {
    pub fn kind(&self) -> OperationKind {
        match self {
            Op::GetData { .. } => OperationKind::GetData,
            Op::Selection { .. } => OperationKind::Selection,
            Op::Join { .. } => OperationKind::Join,
            Op::Union => OperationKind::Union,
            Op::Intersect => OperationKind::Intersect,
            Op::Diff => OperationKind::Diff,
            Op::Min { .. } => OperationKind::Min,
            Op::Max { .. } => OperationKind::Max,
            Op::GroupBy { .. } => OperationKind::GroupBy,
            Op::Projection { .. } => OperationKind::Projection,
            Op::Distinct => OperationKind::Distinct,
            Op::Count => OperationKind::Count,
            Op::Sum { .. } => OperationKind::Sum,
            Op::Average { .. } => OperationKind::Average,
            Op::IsEmpty => OperationKind::IsEmpty,
            Op::Done => OperationKind::Done,
        }
    }

    /// Attributes named in the arguments of this operation.
    pub fn attributes(&self) -> Vec<&AttrRef> {
        match self {
            Op::Selection { attribute, .. }
            | Op::Min { attribute }
            | Op::Max { attribute }
            | Op::Sum { attribute }
            | Op::Average { attribute } => vec![attribute],
            Op::Join {
                left_key,
                right_key,
            } => vec![left_key, right_key],
            Op::GroupBy {
                group_attribute,
                aggregation_attribute,
                ..
            } => vec![group_attribute, aggregation_attribute],
            Op::Projection { attributes } => attributes.iter().collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::GetData { table, alias: None } => write!(f, "GetData({table})"),
            Op::GetData {
                table,
                alias: Some(a),
            } => write!(f, "GetData({table} as {a})"),
            Op::Selection {
                attribute,
                comparator,
                value,
            } => write!(f, "Selection({attribute} {comparator} {value})"),
            Op::Join {
                left_key,
                right_key,
            } => write!(f, "Join({left_key} = {right_key})"),
            Op::Min { attribute } => write!(f, "Min({attribute})"),
            Op::Max { attribute } => write!(f, "Max({attribute})"),
            Op::GroupBy {
                variant,
                group_attribute,
                aggregation_attribute,
            } => write!(
                f,
                "GroupBy({}, {group_attribute}, {aggregation_attribute})",
                variant.name()
            ),
            Op::Projection { attributes } => {
                let names: Vec<String> = attributes.iter().map(ToString::to_string).collect();
                write!(f, "Projection({})", names.join(", "))
            }
            Op::Sum { attribute } => write!(f, "Sum({attribute})"),
            Op::Average { attribute } => write!(f, "Average({attribute})"),
            other => f.write_str(other.kind().name()),
        }
    }
}

/// One node of an operation tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub op: Op,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(op: Op, children: Vec<Node>) -> Self {
        Node { op, children }
    }

    pub fn kind(&self) -> OperationKind {
        self.op.kind()
    }

    pub fn get_data(table: impl Into<String>) -> Self {
        Node::new(
            Op::GetData {
                table: table.into(),
                alias: None,
            },
            Vec::new(),
        )
    }

    pub fn get_data_as(table: impl Into<String>, alias: impl Into<String>) -> Self {
        Node::new(
            Op::GetData {
                table: table.into(),
                alias: Some(alias.into()),
            },
            Vec::new(),
        )
    }

    pub fn selection(
        attribute: AttrRef,
        comparator: Comparator,
        value: Literal,
        child: Node,
    ) -> Self {
        Node::new(
            Op::Selection {
                attribute,
                comparator,
                value,
            },
            vec![child],
        )
    }

    pub fn join(left_key: AttrRef, right_key: AttrRef, left: Node, right: Node) -> Self {
        Node::new(
            Op::Join {
                left_key,
                right_key,
            },
            vec![left, right],
        )
    }

    pub fn binary(op: Op, left: Node, right: Node) -> Self {
        Node::new(op, vec![left, right])
    }

    pub fn unary(op: Op, child: Node) -> Self {
        Node::new(op, vec![child])
    }

    pub fn projection(attributes: Vec<AttrRef>, child: Node) -> Self {
        Node::unary(Op::Projection { attributes }, child)
    }

    pub fn done(child: Node) -> Self {
        Node::unary(Op::Done, child)
    }

    /// Node at `path`, if it exists.
    pub fn at(&self, path: &NodePath) -> Option<&Node> {
        path.0
            .iter()
            .try_fold(self, |node, &i| node.children.get(i))
    }

    pub fn at_mut(&mut self, path: &NodePath) -> Option<&mut Node> {
        let mut node = self;
        for &i in &path.0 {
            node = node.children.get_mut(i)?;
        }
        Some(node)
    }

    /// Pre-order traversal (root first, children left to right).
    pub fn preorder(&self) -> Vec<(NodePath, &Node)> {
        let mut out = Vec::new();
        let mut stack = vec![(NodePath::root(), self)];
        while let Some((path, node)) = stack.pop() {
            for (i, child) in node.children.iter().enumerate().rev() {
                stack.push((path.child(i), child));
            }
            out.push((path, node));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Node::node_count).sum::<usize>()
    }

    /// Relation name → table name, collected from the `GetData` leaves.
    pub fn relations(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (_, node) in self.preorder() {
            if let Op::GetData { table, alias } = &node.op {
                let name = alias.clone().unwrap_or_else(|| table.clone());
                out.insert(name, table.clone());
            }
        }
        out
    }

    /// Name of the leftmost relation in the subtree; the relation that
    /// survives `Distinct` and the set operations.
    pub fn primary_relation(&self) -> Option<String> {
        match &self.op {
            Op::GetData { table, alias } => Some(alias.clone().unwrap_or_else(|| table.clone())),
            _ => self.children.first()?.primary_relation(),
        }
    }
}

/// Position of a node as the list of child indices from the root.
///
/// Rendered as `/` for the root and `/0/1` for deeper nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        NodePath(v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| format!("node path `{s}` must start with `/`"))?;
        if rest.is_empty() {
            return Ok(NodePath::root());
        }
        rest.split('/')
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| format!("bad node path `{s}`"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NodePath)
    }
}

/// A complete operation tree bound (optionally) to a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationTree {
    pub id: Option<String>,
    pub schema_id: Option<String>,
    pub root: Node,
}

impl OperationTree {
    pub fn new(root: Node) -> Self {
        OperationTree {
            id: None,
            schema_id: None,
            root,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_schema(mut self, schema_id: impl Into<String>) -> Self {
        self.schema_id = Some(schema_id.into());
        self
    }

    pub fn root_kind(&self) -> OperationKind {
        self.root.kind()
    }
}
