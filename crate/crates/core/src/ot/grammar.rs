//! The operation-tree grammar and its production-rule linearization.
//!
//! ```text
//!  0  S -> Done(R)          6  R -> Projection(T)     11  T -> Intersect(T, T)
//!  1  S -> Count(T)         7  T -> GetData           12  T -> Diff(T, T)
//!  2  S -> Sum(T)           8  T -> Selection(T)      13  T -> Min(T)
//!  3  S -> Average(T)       9  T -> Join(T, T)        14  T -> Max(T)
//!  4  S -> IsEmpty(T)      10  T -> Union(T, T)       15  T -> Distinct(T)
//!  5  S -> GroupBy(T)
//! ```
//!
//! Terminal arguments (tables, attributes, comparators, values) travel with
//! each rule application. `Distinct` is an extension over the base
//! relational operations, used for "different ..." questions.
//!
//! Rule ids follow the table above and are stable.

use std::fmt;

use thiserror::Error;

use super::tree::{Node, NonTerminal, Op, OperationKind, OperationTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u8);

/// One production `lhs -> kind(rhs...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Production {
    pub id: RuleId,
    pub lhs: NonTerminal,
    pub kind: OperationKind,
    pub rhs: &'static [NonTerminal],
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.kind)?;
        if !self.rhs.is_empty() {
            let parts: Vec<String> = self.rhs.iter().map(ToString::to_string).collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

const RULE_ORDER: [OperationKind; 16] = [
    OperationKind::Done,
    OperationKind::Count,
    OperationKind::Sum,
    OperationKind::Average,
    OperationKind::IsEmpty,
    OperationKind::GroupBy,
    OperationKind::Projection,
    OperationKind::GetData,
    OperationKind::Selection,
    OperationKind::Join,
    OperationKind::Union,
    OperationKind::Intersect,
    OperationKind::Diff,
    OperationKind::Min,
    OperationKind::Max,
    OperationKind::Distinct,
];

/// The fixed production list.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub productions: Vec<Production>,
}

impl Grammar {
    pub fn standard() -> Self {
        let productions = RULE_ORDER
            .iter()
            .enumerate()
            .map(|(i, &kind)| Production {
                id: RuleId(i as u8),
                lhs: kind.lhs(),
                kind,
                rhs: kind.rhs(),
            })
            .collect();
        Grammar { productions }
    }

    pub fn start(&self) -> NonTerminal {
        NonTerminal::S
    }

    pub fn production(&self, id: RuleId) -> Option<&Production> {
        self.productions.get(id.0 as usize)
    }
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar::standard()
    }
}

/// Rule id for the production that derives `kind`.
pub fn rule_for(kind: OperationKind) -> RuleId {
    let idx = RULE_ORDER
        .iter()
        .position(|k| *k == kind)
        .expect("every kind has a production");
    RuleId(idx as u8)
}

/// A rule application with its terminal arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleStep {
    pub rule: RuleId,
    pub op: Op,
}

#[derive(Debug, Error, PartialEq)]
pub enum DerivationError {
    #[error("no derivation: empty rule sequence")]
    NoDerivation,
    #[error("inapplicable rule at position {position}: {found} cannot expand {expected}")]
    InapplicableRule {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown rule id {id} at position {position}")]
    UnknownRule { position: usize, id: u8 },
    #[error("rule {rule} at position {position} does not match its arguments ({kind})")]
    ArgumentMismatch {
        position: usize,
        rule: u8,
        kind: OperationKind,
    },
    #[error("incomplete derivation: {0} non-terminal(s) left unexpanded")]
    Incomplete(usize),
}

/// Leftmost (pre-order) derivation of the tree.
pub fn to_rule_sequence(tree: &OperationTree) -> Vec<RuleStep> {
    tree.root
        .preorder()
        .into_iter()
        .map(|(_, n)| RuleStep {
            rule: rule_for(n.kind()),
            op: n.op.clone(),
        })
        .collect()
}

/// Rebuilds a tree from its leftmost derivation, starting at `S`.
pub fn from_rule_sequence(steps: &[RuleStep]) -> Result<OperationTree, DerivationError> {
    if steps.is_empty() {
        return Err(DerivationError::NoDerivation);
    }
    let grammar = Grammar::standard();
    let mut pos = 0;
    let root = expand(&grammar, steps, &mut pos, grammar.start())?;
    if pos < steps.len() {
        return Err(DerivationError::InapplicableRule {
            position: pos,
            expected: "nothing (derivation complete)".into(),
            found: describe(&grammar, steps[pos].rule),
        });
    }
    Ok(OperationTree::new(root))
}

fn describe(grammar: &Grammar, id: RuleId) -> String {
    grammar
        .production(id)
        .map(ToString::to_string)
        .unwrap_or_else(|| format!("rule {}", id.0))
}

fn expand(
    grammar: &Grammar,
    steps: &[RuleStep],
    pos: &mut usize,
    expected: NonTerminal,
) -> Result<Node, DerivationError> {
    let position = *pos;
    let Some(step) = steps.get(position) else {
        return Err(DerivationError::Incomplete(1));
    };
    let prod = grammar
        .production(step.rule)
        .ok_or(DerivationError::UnknownRule {
            position,
            id: step.rule.0,
        })?;
    if prod.lhs != expected {
        return Err(DerivationError::InapplicableRule {
            position,
            expected: expected.to_string(),
            found: prod.to_string(),
        });
    }
    if prod.kind != step.op.kind() {
        return Err(DerivationError::ArgumentMismatch {
            position,
            rule: step.rule.0,
            kind: step.op.kind(),
        });
    }
    *pos += 1;
    let mut children = Vec::with_capacity(prod.rhs.len());
    for (i, nt) in prod.rhs.iter().enumerate() {
        match expand(grammar, steps, pos, *nt) {
            Err(DerivationError::Incomplete(_)) => {
                return Err(DerivationError::Incomplete(prod.rhs.len() - i));
            }
            other => children.push(other?),
        }
    }
    Ok(Node::new(step.op.clone(), children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::AttrRef;

    #[test]
    fn rule_ids_are_stable() {
        let g = Grammar::standard();
        let text: Vec<String> = g.productions.iter().map(ToString::to_string).collect();
        assert_eq!(text[0], "S -> Done(R)");
        assert_eq!(text[6], "R -> Projection(T)");
        assert_eq!(text[7], "T -> GetData");
        assert_eq!(text[9], "T -> Join(T, T)");
        assert_eq!(text[15], "T -> Distinct(T)");
        for k in OperationKind::ALL {
            assert_eq!(g.production(rule_for(k)).unwrap().kind, k);
        }
    }

    #[test]
    fn empty_sequence_has_no_derivation() {
        assert_eq!(from_rule_sequence(&[]), Err(DerivationError::NoDerivation));
    }

    #[test]
    fn t_rule_at_start_is_inapplicable() {
        let steps = vec![RuleStep {
            rule: rule_for(OperationKind::GetData),
            op: Op::GetData {
                table: "a".into(),
                alias: None,
            },
        }];
        let err = from_rule_sequence(&steps).unwrap_err();
        assert!(matches!(
            err,
            DerivationError::InapplicableRule { position: 0, .. }
        ));
        assert!(err
            .to_string()
            .starts_with("inapplicable rule at position 0"));
    }

    #[test]
    fn truncated_and_overlong_sequences() {
        let tree = OperationTree::new(Node::done(Node::projection(
            vec![AttrRef::new("a", "x")],
            Node::get_data("a"),
        )));
        let seq = to_rule_sequence(&tree);
        assert_eq!(seq.len(), 3);
        assert_eq!(
            from_rule_sequence(&seq[..2]),
            Err(DerivationError::Incomplete(1))
        );
        let mut long = seq.clone();
        long.push(seq[2].clone());
        assert!(matches!(
            from_rule_sequence(&long),
            Err(DerivationError::InapplicableRule { position: 3, .. })
        ));
        assert_eq!(from_rule_sequence(&seq).unwrap(), tree);
    }

    #[test]
    fn rule_and_argument_must_agree() {
        let steps = vec![RuleStep {
            rule: rule_for(OperationKind::Count),
            op: Op::Done,
        }];
        assert!(matches!(
            from_rule_sequence(&steps),
            Err(DerivationError::ArgumentMismatch { position: 0, .. })
        ));
    }
}
