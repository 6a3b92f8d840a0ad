//! Tree hardness and corpus statistics.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{corpus_report, corpus_report_with, CorpusReport, Ratios, ReportOptions};

use crate::ot::{Node, Op, OperationKind, OperationTree};
use crate::schema::{ColumnRef, SchemaGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HardnessCategory {
    Easy,
    Medium,
    Hard,
    ExtraHard,
}

impl HardnessCategory {
    pub const ALL: [HardnessCategory; 4] = [
        HardnessCategory::Easy,
        HardnessCategory::Medium,
        HardnessCategory::Hard,
        HardnessCategory::ExtraHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HardnessCategory::Easy => "Easy",
            HardnessCategory::Medium => "Medium",
            HardnessCategory::Hard => "Hard",
            HardnessCategory::ExtraHard => "ExtraHard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hardness {
    pub category: HardnessCategory,
    pub raw_score: u32,
}

/// Component weights and category thresholds. A score `<= easy` is Easy,
/// `<= medium` Medium, `<= hard` Hard, anything above Extra Hard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardnessWeights {
    pub join: u32,
    pub group_by: u32,
    pub set_op: u32,
    pub selection: u32,
    pub aggregation: u32,
    pub is_empty: u32,
    pub easy: u32,
    pub medium: u32,
    pub hard: u32,
}

impl Default for HardnessWeights {
    fn default() -> Self {
        HardnessWeights {
            join: 1,
            group_by: 2,
            set_op: 2,
            selection: 1,
            aggregation: 1,
            is_empty: 1,
            easy: 1,
            medium: 3,
            hard: 5,
        }
    }
}

impl HardnessWeights {
    pub fn category(&self, raw: u32) -> HardnessCategory {
        if raw <= self.easy {
            HardnessCategory::Easy
        } else if raw <= self.medium {
            HardnessCategory::Medium
        } else if raw <= self.hard {
            HardnessCategory::Hard
        } else {
            HardnessCategory::ExtraHard
        }
    }

    pub fn score(&self, tree: &OperationTree) -> Hardness {
        let c = component_counts(tree);
        let raw = self.join * c.get(OperationKind::Join)
            + self.group_by * c.get(OperationKind::GroupBy)
            + self.set_op * c.set_ops()
            + self.selection * c.get(OperationKind::Selection)
            + self.aggregation * c.aggregations()
            + self.is_empty * c.get(OperationKind::IsEmpty);
        Hardness {
            category: self.category(raw),
            raw_score: raw,
        }
    }
}

/// Hardness with the default weights.
pub fn hardness(tree: &OperationTree) -> Hardness {
    HardnessWeights::default().score(tree)
}

/// Node tally per operation kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts(pub BTreeMap<OperationKind, u32>);

impl ComponentCounts {
    pub fn get(&self, kind: OperationKind) -> u32 {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    pub fn set_ops(&self) -> u32 {
        self.get(OperationKind::Union)
            + self.get(OperationKind::Intersect)
            + self.get(OperationKind::Diff)
    }

    /// Count, Sum, Average, Min and Max nodes.
    pub fn aggregations(&self) -> u32 {
        [
            OperationKind::Count,
            OperationKind::Sum,
            OperationKind::Average,
            OperationKind::Min,
            OperationKind::Max,
        ]
        .iter()
        .map(|k| self.get(*k))
        .sum()
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }
}

pub fn component_counts(tree: &OperationTree) -> ComponentCounts {
    let mut counts = BTreeMap::new();
    tally(&tree.root, &mut counts);
    ComponentCounts(counts)
}

fn tally(node: &Node, counts: &mut BTreeMap<OperationKind, u32>) {
    *counts.entry(node.kind()).or_insert(0) += 1;
    for c in &node.children {
        tally(c, counts);
    }
}

/// Selections applied on top of a grouped relation.
pub fn having_count(tree: &OperationTree) -> u32 {
    fn walk(node: &Node) -> (u32, bool) {
        let mut count = 0;
        let mut grouped = false;
        for c in &node.children {
            let (n, g) = walk(c);
            count += n;
            grouped |= g;
        }
        if node.kind() == OperationKind::Selection && grouped {
            count += 1;
        }
        (count, grouped || node.kind() == OperationKind::GroupBy)
    }
    walk(&tree.root).0
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("tree `{tree}` is bound to schema `{bound}`, expected `{expected}`")]
    SchemaMismatch {
        tree: String,
        bound: String,
        expected: String,
    },
}

/// Tables and columns referenced by a tree, resolved through aliases.
pub fn referenced(tree: &OperationTree) -> (BTreeSet<String>, BTreeSet<ColumnRef>) {
    let relations = tree.root.relations();
    let mut tables = BTreeSet::new();
    let mut columns = BTreeSet::new();
    for (_, node) in tree.root.preorder() {
        if let Op::GetData { table, .. } = &node.op {
            tables.insert(table.clone());
        }
        for a in node.op.attributes() {
            let table = relations
                .get(&a.relation)
                .cloned()
                .unwrap_or_else(|| a.relation.clone());
            columns.insert(ColumnRef::new(table, a.column.clone()));
        }
    }
    (tables, columns)
}

/// Fraction of schema tables and attributes referenced by at least one tree.
/// An empty corpus covers nothing.
pub fn coverage(
    corpus: &[OperationTree],
    schema: &SchemaGraph,
) -> Result<(f64, f64), AnalysisError> {
    let mut tables = BTreeSet::new();
    let mut columns = BTreeSet::new();
    for tree in corpus {
        if let Some(bound) = &tree.schema_id {
            if *bound != schema.id {
                return Err(AnalysisError::SchemaMismatch {
                    tree: tree.id.clone().unwrap_or_default(),
                    bound: bound.clone(),
                    expected: schema.id.clone(),
                });
            }
        }
        let (t, c) = referenced(tree);
        tables.extend(t);
        columns.extend(c);
    }
    let used_tables = tables.iter().filter(|t| schema.table(t).is_some()).count();
    let used_cols = columns
        .iter()
        .filter(|c| schema.column(c).is_some())
        .count();
    let ratio = |used: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            used as f64 / total as f64
        }
    };
    Ok((
        ratio(used_tables, schema.tables.len()),
        ratio(used_cols, schema.attribute_count()),
    ))
}

/// Mean segmental type-token ratio.
///
/// Tokens of all questions are lowercased and concatenated, cut into
/// consecutive segments of exactly `segment_length` tokens (a trailing
/// partial segment is dropped), and the distinct-type ratio is averaged over
/// segments. Returns `None` (undefined) when there is not one full segment.
pub fn msttr<S: AsRef<str>>(questions: &[Vec<S>], segment_length: usize) -> Option<f64> {
    if segment_length == 0 {
        return None;
    }
    let tokens: Vec<String> = questions
        .iter()
        .flat_map(|q| q.iter().map(|t| t.as_ref().to_lowercase()))
        .collect();
    let segments: Vec<&[String]> = tokens.chunks_exact(segment_length).collect();
    if segments.is_empty() {
        return None;
    }
    let sum: f64 = segments
        .iter()
        .map(|seg| seg.iter().collect::<BTreeSet<_>>().len() as f64 / segment_length as f64)
        .sum();
    Some(sum / segments.len() as f64)
}

pub const DEFAULT_MSTTR_SEGMENT: usize = 50;
