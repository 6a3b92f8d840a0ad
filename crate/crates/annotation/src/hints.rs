//! Guideline text shown next to each node during token assignment. Hints
//! are advice only; nothing here is enforced.

use otforge_core::{Node, Op, OperationKind, SchemaGraph};

pub fn hint(node: &Node, schema: &SchemaGraph) -> &'static str {
    match &node.op {
        Op::GetData { table, .. } if schema.table(table).is_some_and(|t| t.is_bridge) => {
            "Bridge table: assign the words that express the relationship it stores, usually a verb such as \
             `played in`. Leave it empty if the question never mentions the relationship."
        }
        _ => kind_hint(node.kind()),
    }
}

pub fn kind_hint(kind: OperationKind) -> &'static str {
    match kind {
        OperationKind::Done => "No tokens needed; this node closes the question.",
        OperationKind::Projection => "Assign the words naming the returned attributes, e.g. `names` or `titles`.",
        OperationKind::GetData => "Assign the noun that refers to the entities of this table, e.g. `movies`.",
        OperationKind::Selection => {
            "Assign the attribute name, the comparison words (`more than`, `before`) and the value itself."
        }
        OperationKind::Join => {
            "Assign the words linking the two sides, often a verb or preposition. Joins through a bridge table \
             usually share tokens with that table."
        }
        OperationKind::Union => "Assign the connective that combines both sets, usually `or`.",
        OperationKind::Intersect => "Assign the connective that requires both conditions, e.g. `and` or `both`.",
        OperationKind::Diff => "Assign the words that exclude the second set, e.g. `but not` or `except`.",
        OperationKind::Min => "Assign the superlative, e.g. `lowest`, `earliest`, `cheapest`.",
        OperationKind::Max => "Assign the superlative, e.g. `highest`, `latest`, `most expensive`.",
        OperationKind::Distinct => "Assign words such as `different` or `distinct` when present.",
        OperationKind::Count => "Assign the question words asking for a number, e.g. `How many`.",
        OperationKind::Sum => "Assign the words asking for a total, e.g. `total` or `in sum`.",
        OperationKind::Average => "Assign the words asking for a mean, e.g. `average`.",
        OperationKind::IsEmpty => "Assign the words of a yes/no question, e.g. `Is there` or `Are there any`.",
        OperationKind::GroupBy => "Assign `for each` / `per` and the aggregation words.",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_has_a_hint() {
        for k in OperationKind::ALL {
            assert!(!kind_hint(k).is_empty());
        }
    }
}
