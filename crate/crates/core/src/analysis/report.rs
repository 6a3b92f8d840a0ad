use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    component_counts, coverage, having_count, msttr, AnalysisError, HardnessCategory,
    HardnessWeights,
};
use crate::ot::{OperationKind, OperationTree};
use crate::schema::SchemaGraph;

/// Mean number of components per query.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ratios {
    pub avg_joins: f64,
    pub group_by: f64,
    /// Always 0: the grammar has no ordering operation.
    pub order_by: f64,
    /// Always 0: the grammar has no nested queries.
    pub nested: f64,
    pub having: f64,
    pub set_op: f64,
    pub aggregations: f64,
    /// Fraction of queries with an `IsEmpty` root.
    pub boolean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub segment_length: usize,
    pub weights: HardnessWeights,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            segment_length: super::DEFAULT_MSTTR_SEGMENT,
            weights: HardnessWeights::default(),
        }
    }
}

/// Corpus statistics for one database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub database_id: String,
    pub query_count: usize,
    pub question_count: usize,
    pub table_coverage: f64,
    pub attribute_coverage: f64,
    /// Absent when no questions were supplied or there are fewer tokens
    /// than one segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msttr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_tokens: Option<f64>,
    pub ratios: Ratios,
    pub hardness: BTreeMap<HardnessCategory, usize>,
}

/// [`corpus_report_with`] using default options.
pub fn corpus_report(
    corpus: &[OperationTree],
    schema: &SchemaGraph,
    questions: &[Vec<String>],
) -> Result<CorpusReport, AnalysisError> {
    corpus_report_with(corpus, schema, questions, &ReportOptions::default())
}

/// Builds the report. `questions` holds the tokenized questions that are
/// available; it may be shorter than the corpus or empty.
pub fn corpus_report_with(
    corpus: &[OperationTree],
    schema: &SchemaGraph,
    questions: &[Vec<String>],
    options: &ReportOptions,
) -> Result<CorpusReport, AnalysisError> {
    let (table_coverage, attribute_coverage) = coverage(corpus, schema)?;
    let mut ratios = Ratios::default();
    let mut hardness: BTreeMap<HardnessCategory, usize> =
        HardnessCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for tree in corpus {
        let c = component_counts(tree);
        ratios.avg_joins += c.get(OperationKind::Join) as f64;
        ratios.group_by += c.get(OperationKind::GroupBy) as f64;
        ratios.having += having_count(tree) as f64;
        ratios.set_op += c.set_ops() as f64;
        ratios.aggregations += c.aggregations() as f64;
        if tree.root_kind() == OperationKind::IsEmpty {
            ratios.boolean += 1.0;
        }
        *hardness
            .entry(options.weights.score(tree).category)
            .or_insert(0) += 1;
    }
    if !corpus.is_empty() {
        let n = corpus.len() as f64;
        for r in [
            &mut ratios.avg_joins,
            &mut ratios.group_by,
            &mut ratios.having,
            &mut ratios.set_op,
            &mut ratios.aggregations,
            &mut ratios.boolean,
        ] {
            *r /= n;
        }
    }
    let avg_tokens = (!questions.is_empty())
        .then(|| questions.iter().map(Vec::len).sum::<usize>() as f64 / questions.len() as f64);
    Ok(CorpusReport {
        database_id: schema.id.clone(),
        query_count: corpus.len(),
        question_count: questions.len(),
        table_coverage,
        attribute_coverage,
        msttr: msttr(questions, options.segment_length),
        avg_tokens,
        ratios,
        hardness,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

impl CorpusReport {
    /// Fixed-column text rendering: a corpus table, a component-ratio table
    /// and the hardness histogram.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>9} {:>10} {:>10} {:>9} {:>8} {:>12}",
            "Database",
            "#Queries",
            "#Questions",
            "Table Cov.",
            "Attr Cov.",
            "MSTTR",
            "Avg. #Tokens"
        );
        let _ = writeln!(
            out,
            "{:<16} {:>9} {:>10} {:>10.3} {:>9.3} {:>8} {:>12}",
            self.database_id,
            self.query_count,
            self.question_count,
            self.table_coverage,
            self.attribute_coverage,
            opt(self.msttr),
            self.avg_tokens
                .map_or_else(|| "-".to_string(), |x| format!("{x:.2}")),
        );
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>10} {:>9} {:>9} {:>8} {:>8} {:>7} {:>13} {:>8}",
            "Avg. Join",
            "Group By",
            "Order By",
            "Nested",
            "Having",
            "Set Op",
            "Aggregations",
            "Boolean"
        );
        let r = &self.ratios;
        let _ = writeln!(
            out,
            "{:>10.3} {:>9.3} {:>9.3} {:>8.3} {:>8.3} {:>7.3} {:>13.3} {:>8.3}",
            r.avg_joins,
            r.group_by,
            r.order_by,
            r.nested,
            r.having,
            r.set_op,
            r.aggregations,
            r.boolean
        );
        out.push('\n');
        let _ = writeln!(out, "{:<10} {:>7} {:>7}", "Hardness", "Count", "Share");
        for cat in HardnessCategory::ALL {
            let n = self.hardness.get(&cat).copied().unwrap_or(0);
            let share = if self.query_count == 0 {
                0.0
            } else {
                n as f64 / self.query_count as f64
            };
            let _ = writeln!(out, "{:<10} {:>7} {:>7.3}", cat.name(), n, share);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::{AttrRef, Node};
    use crate::schema::{Attribute, ColumnType, Table};

    fn schema() -> SchemaGraph {
        SchemaGraph::new(
            "toy",
            vec![Table::new(
                "t",
                vec![
                    Attribute::key("id", ColumnType::Integer),
                    Attribute::new("x", ColumnType::Integer),
                ],
            )],
            vec![],
        )
        .unwrap()
    }

    fn count_tree() -> OperationTree {
        OperationTree::new(Node::unary(crate::ot::Op::Count, Node::get_data("t")))
    }

    #[test]
    fn single_query_ratios_are_indicators() {
        let r = corpus_report(&[count_tree()], &schema(), &[]).unwrap();
        assert_eq!(r.query_count, 1);
        assert_eq!(r.ratios.aggregations, 1.0);
        assert_eq!(r.ratios.avg_joins, 0.0);
        assert_eq!(r.ratios.boolean, 0.0);
        assert_eq!(r.msttr, None);
        assert_eq!(r.avg_tokens, None);
        assert_eq!(r.hardness[&HardnessCategory::Easy], 1);
    }

    #[test]
    fn absent_metrics_are_omitted_from_json() {
        let r = corpus_report(&[count_tree()], &schema(), &[]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("msttr").is_none());
        assert!(v.get("avg_tokens").is_none());
        assert_eq!(v["ratios"]["order_by"], 0.0);
    }

    #[test]
    fn table_mentions_every_column() {
        let tree = OperationTree::new(Node::done(Node::projection(
            vec![AttrRef::new("t", "x")],
            Node::get_data("t"),
        )));
        let q = vec![vec!["what".to_string(), "x".to_string()]];
        let text = corpus_report(&[tree], &schema(), &q).unwrap().to_table();
        for h in [
            "Table Cov.",
            "Attr Cov.",
            "MSTTR",
            "Avg. #Tokens",
            "Having",
            "Set Op",
            "Boolean",
            "ExtraHard",
        ] {
            assert!(text.contains(h), "missing {h}");
        }
        assert!(text.contains("2.00"));
    }
}
