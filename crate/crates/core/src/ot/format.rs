//! Canonical JSON format for operation trees.
//!
//! A node is `{"op": <kind>, "args": {...}, "children": [...]}`. A tree record
//! is its root node with optional top-level `"id"` and `"schema_id"` keys.
//! Keys are emitted in sorted order, so serialization is byte-stable.
//!
//! | op                     | args                                                     |
//! |------------------------|----------------------------------------------------------|
//! | GetData                | `table`, optional `alias`                                |
//! | Selection              | `attribute`, `comparator`, `value`                       |
//! | Join                   | `left_key`, `right_key`                                  |
//! | Projection             | `attributes` (array)                                     |
//! | GroupBy                | `variant` (avg/sum/count), `group_attribute`, `aggregation_attribute` |
//! | Min, Max, Sum, Average | `attribute`                                              |
//! | others                 | none (`{}`)                                              |
//!
//! Attributes are `"table.column"` strings; comparators are one of
//! `= != < <= > >= contains`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::tree::{
    AttrRef, Comparator, GroupVariant, Literal, Node, Op, OperationKind, OperationTree,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ParseError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        ParseError::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub fn serialize(tree: &OperationTree) -> String {
    to_value(tree).to_string()
}

pub fn serialize_pretty(tree: &OperationTree) -> String {
    serde_json::to_string_pretty(&to_value(tree)).expect("JSON values always serialize")
}

pub fn to_value(tree: &OperationTree) -> Value {
    let mut v = node_to_value(&tree.root);
    let obj = v.as_object_mut().expect("nodes are objects");
    if let Some(id) = &tree.id {
        obj.insert("id".into(), Value::String(id.clone()));
    }
    if let Some(s) = &tree.schema_id {
        obj.insert("schema_id".into(), Value::String(s.clone()));
    }
    v
}

pub fn node_to_value(node: &Node) -> Value {
    let attr = |a: &AttrRef| Value::String(a.to_string());
    let args = match &node.op {
        Op::GetData { table, alias } => {
            let mut m = Map::new();
            m.insert("table".into(), Value::String(table.clone()));
            if let Some(a) = alias {
                m.insert("alias".into(), Value::String(a.clone()));
            }
            Value::Object(m)
        }
        Op::Selection {
            attribute,
            comparator,
            value,
        } => json!({
            "attribute": attr(attribute),
            "comparator": comparator.symbol(),
            "value": literal_to_value(value),
        }),
        Op::Join {
            left_key,
            right_key,
        } => json!({"left_key": attr(left_key), "right_key": attr(right_key)}),
        Op::Projection { attributes } => {
            json!({"attributes": attributes.iter().map(attr).collect::<Vec<_>>()})
        }
        Op::GroupBy {
            variant,
            group_attribute,
            aggregation_attribute,
        } => json!({
            "variant": variant.name(),
            "group_attribute": attr(group_attribute),
            "aggregation_attribute": attr(aggregation_attribute),
        }),
        Op::Min { attribute }
        | Op::Max { attribute }
        | Op::Sum { attribute }
        | Op::Average { attribute } => {
            json!({"attribute": attr(attribute)})
        }
        _ => json!({}),
    };
    json!({
        "op": node.kind().name(),
        "args": args,
        "children": node.children.iter().map(node_to_value).collect::<Vec<_>>(),
    })
}

pub fn literal_to_value(l: &Literal) -> Value {
    match l {
        Literal::Integer(i) => json!(i),
        Literal::Real(r) => json!(r),
        Literal::Text(s) => json!(s),
        Literal::Boolean(b) => json!(b),
    }
}

pub fn literal_from_value(v: &Value, field: &str) -> Result<Literal, ParseError> {
    match v {
        Value::Bool(b) => Ok(Literal::Boolean(*b)),
        Value::String(s) => Ok(Literal::Text(s.clone())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Literal::Integer(i))
            } else if n.is_u64() {
                Err(ParseError::field(field, "integer out of range"))
            } else {
                Ok(Literal::Real(
                    n.as_f64().expect("non-integer JSON numbers are f64"),
                ))
            }
        }
        _ => Err(ParseError::field(
            field,
            "value must be a number, string or boolean",
        )),
    }
}

/// Parses one tree record.
pub fn parse(text: &str) -> Result<OperationTree, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(&value)
}

pub fn from_value(value: &Value) -> Result<OperationTree, ParseError> {
    let root = node_from_value(value, "$")?;
    let obj = value.as_object().expect("checked by node_from_value");
    let text = |key: &str| -> Result<Option<String>, ParseError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(ParseError::field(&format!("$.{key}"), "must be a string")),
        }
    };
    Ok(OperationTree {
        id: text("id")?,
        schema_id: text("schema_id")?,
        root,
    })
}

pub fn node_from_value(value: &Value, at: &str) -> Result<Node, ParseError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ParseError::field(at, "node must be an object"))?;
    let op_name = match obj.get("op") {
        None => return Err(ParseError::field(at, "missing op field")),
        Some(Value::String(s)) => s,
        Some(_) => {
            return Err(ParseError::field(
                &format!("{at}.op"),
                "op must be a string",
            ))
        }
    };
    let kind: OperationKind = op_name
        .parse()
        .map_err(|e: String| ParseError::field(&format!("{at}.op"), e))?;
    let empty = Map::new();
    let args_at = format!("{at}.args");
    let args = match obj.get("args") {
        None => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => return Err(ParseError::field(&args_at, "args must be an object")),
    };
    let args = Args {
        map: args,
        at: &args_at,
    };
    let op = match kind {
        OperationKind::GetData => Op::GetData {
            table: args.string("table")?,
            alias: args.opt_string("alias")?,
        },
        OperationKind::Selection => Op::Selection {
            attribute: args.attr("attribute")?,
            comparator: {
                let s = args.string("comparator")?;
                s.parse::<Comparator>()
                    .map_err(|e| ParseError::field(&format!("{args_at}.comparator"), e))?
            },
            value: literal_from_value(args.get("value")?, &format!("{args_at}.value"))?,
        },
        OperationKind::Join => Op::Join {
            left_key: args.attr("left_key")?,
            right_key: args.attr("right_key")?,
        },
        OperationKind::Union => Op::Union,
        OperationKind::Intersect => Op::Intersect,
        OperationKind::Diff => Op::Diff,
        OperationKind::Min => Op::Min {
            attribute: args.attr("attribute")?,
        },
        OperationKind::Max => Op::Max {
            attribute: args.attr("attribute")?,
        },
        OperationKind::GroupBy => Op::GroupBy {
            variant: args
                .string("variant")?
                .parse::<GroupVariant>()
                .map_err(|e| ParseError::field(&format!("{args_at}.variant"), e))?,
            group_attribute: args.attr("group_attribute")?,
            aggregation_attribute: args.attr("aggregation_attribute")?,
        },
        OperationKind::Projection => {
            let field = format!("{args_at}.attributes");
            let list = args
                .get("attributes")?
                .as_array()
                .ok_or_else(|| ParseError::field(&field, "must be an array"))?;
            let attributes = list
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let f = format!("{field}[{i}]");
                    let s = v
                        .as_str()
                        .ok_or_else(|| ParseError::field(&f, "must be a string"))?;
                    s.parse::<AttrRef>().map_err(|e| ParseError::field(&f, e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Op::Projection { attributes }
        }
        OperationKind::Distinct => Op::Distinct,
        OperationKind::Count => Op::Count,
        OperationKind::Sum => Op::Sum {
            attribute: args.attr("attribute")?,
        },
        OperationKind::Average => Op::Average {
            attribute: args.attr("attribute")?,
        },
        OperationKind::IsEmpty => Op::IsEmpty,
        OperationKind::Done => Op::Done,
    };
    let children = match obj.get("children") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, c)| node_from_value(c, &format!("{at}.children[{i}]")))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => {
            return Err(ParseError::field(
                &format!("{at}.children"),
                "children must be an array",
            ))
        }
    };
    Ok(Node::new(op, children))
}

struct Args<'a> {
    map: &'a Map<String, Value>,
    at: &'a str,
}

impl<'a> Args<'a> {
    fn get(&self, key: &str) -> Result<&'a Value, ParseError> {
        self.map
            .get(key)
            .ok_or_else(|| ParseError::field(&format!("{}.{key}", self.at), "missing field"))
    }

    fn string(&self, key: &str) -> Result<String, ParseError> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ParseError::field(&format!("{}.{key}", self.at), "must be a string"))
    }

    fn opt_string(&self, key: &str) -> Result<Option<String>, ParseError> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.string(key).map(Some),
        }
    }

    fn attr(&self, key: &str) -> Result<AttrRef, ParseError> {
        self.string(key)?
            .parse()
            .map_err(|e| ParseError::field(&format!("{}.{key}", self.at), e))
    }
}
