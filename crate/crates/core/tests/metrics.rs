use std::collections::BTreeSet;

use otforge_core::analysis::{component_counts, corpus_report, coverage, msttr};
use otforge_core::schema::{Attribute, ColumnRef, ForeignKey, Table};
use otforge_core::{
    AttrRef, ColumnType, Comparator, HardnessCategory, Literal, Node, Op, OperationKind,
    OperationTree, SchemaGraph,
};
use otforge_testkit::Fixture;

fn a(rel: &str, col: &str) -> AttrRef {
    AttrRef::new(rel, col)
}

#[test]
fn msttr_of_120_tokens_by_hand() {
    // Segment 1: 25 words, each twice -> 25 / 50.
    // Segment 2: 40 distinct words plus "The"/"the" five times each -> 41 / 50.
    // The 20 trailing tokens do not fill a segment and are dropped.
    let mut tokens: Vec<String> = (0..25)
        .flat_map(|i| [format!("w{i}"), format!("w{i}")])
        .collect();
    tokens.extend((0..40).map(|i| format!("y{i}")));
    tokens.extend((0..10).map(|i| if i % 2 == 0 { "The" } else { "the" }.to_string()));
    tokens.extend((0..20).map(|i| format!("z{i}")));
    assert_eq!(tokens.len(), 120);
    let questions: Vec<Vec<String>> = tokens.chunks(13).map(|c| c.to_vec()).collect();
    let expected = (25.0 / 50.0 + 41.0 / 50.0) / 2.0;
    assert!((msttr(&questions, 50).unwrap() - expected).abs() < 1e-9);
    assert_eq!(msttr(&questions[..3], 50), None);
}

fn toy_schema() -> SchemaGraph {
    let id = || Attribute::key("id", ColumnType::Integer);
    SchemaGraph::new(
        "toy",
        vec![
            Table::new("a", vec![id(), Attribute::new("x", ColumnType::Text)]),
            Table::new(
                "b",
                vec![
                    id(),
                    Attribute::new("a_id", ColumnType::Integer),
                    Attribute::new("y", ColumnType::Real),
                ],
            ),
            Table::new("c", vec![id(), Attribute::new("z", ColumnType::Text)]),
            Table::new("d", vec![id(), Attribute::new("w", ColumnType::Integer)]),
        ],
        vec![ForeignKey::new(
            ColumnRef::new("b", "a_id"),
            ColumnRef::new("a", "id"),
        )],
    )
    .unwrap()
}

#[test]
fn coverage_of_two_queries_on_four_tables() {
    let schema = toy_schema();
    let q1 = OperationTree::new(Node::done(Node::projection(
        vec![a("a", "x")],
        Node::get_data("a"),
    )));
    let q2 = OperationTree::new(Node::unary(
        Op::Count,
        Node::selection(
            a("c", "z"),
            Comparator::Eq,
            Literal::Text("q".into()),
            Node::get_data("c"),
        ),
    ));
    let (t, attr) = coverage(&[q1, q2], &schema).unwrap();
    assert!((t - 2.0 / 4.0).abs() < 1e-12);
    assert!((attr - 2.0 / 9.0).abs() < 1e-12);
    assert_eq!(coverage(&[], &schema).unwrap(), (0.0, 0.0));
}

#[test]
fn coverage_refuses_trees_bound_to_another_schema() {
    let schema = toy_schema();
    let q = OperationTree::new(Node::done(Node::projection(
        vec![a("a", "x")],
        Node::get_data("a"),
    )))
    .with_schema("other");
    assert!(coverage(&[q], &schema).is_err());
}

fn bought(product: &str) -> Node {
    Node::join(
        a("customer", "id"),
        a("purchase", "customer_id"),
        Node::get_data("customer"),
        Node::join(
            a("purchase", "product_id"),
            a("product", "id"),
            Node::get_data("purchase"),
            Node::selection(
                a("product", "name"),
                Comparator::Eq,
                Literal::Text(product.into()),
                Node::get_data("product"),
            ),
        ),
    )
}

fn synthetic_corpus() -> Vec<OperationTree> {
    let list = || {
        OperationTree::new(Node::done(Node::projection(
            vec![a("customer", "name")],
            Node::get_data("customer"),
        )))
    };
    let count = || {
        OperationTree::new(Node::unary(
            Op::Count,
            Node::join(
                a("purchase", "product_id"),
                a("product", "id"),
                Node::get_data("purchase"),
                Node::get_data("product"),
            ),
        ))
    };
    let boolean = || {
        OperationTree::new(Node::unary(
            Op::IsEmpty,
            Node::selection(
                a("product", "price"),
                Comparator::Gt,
                Literal::Real(3.0),
                Node::get_data("product"),
            ),
        ))
    };
    let union = OperationTree::new(Node::done(Node::projection(
        vec![a("customer", "name")],
        Node::binary(Op::Union, bought("Pen"), bought("Lamp")),
    )));
    let mut out = vec![
        list(),
        list(),
        list(),
        list(),
        count(),
        count(),
        count(),
        boolean(),
        boolean(),
        union,
    ];
    for (i, t) in out.iter_mut().enumerate() {
        t.id = Some(format!("syn-{i}"));
    }
    out
}

#[test]
fn report_over_ten_synthetic_trees() {
    let schema = Fixture::Shop.in_memory().load_schema().unwrap();
    let corpus = synthetic_corpus();
    let r = corpus_report(&corpus, &schema, &[]).unwrap();
    assert_eq!(r.query_count, 10);
    assert_eq!(r.question_count, 0);
    assert_eq!(r.msttr, None);
    assert_eq!(r.avg_tokens, None);
    assert!((r.ratios.avg_joins - 0.7).abs() < 1e-12);
    assert!((r.ratios.set_op - 0.1).abs() < 1e-12);
    assert!((r.ratios.aggregations - 0.3).abs() < 1e-12);
    assert!((r.ratios.boolean - 0.2).abs() < 1e-12);
    assert_eq!(r.ratios.group_by, 0.0);
    assert_eq!(r.ratios.having, 0.0);
    assert_eq!(r.hardness[&HardnessCategory::Easy], 4);
    assert_eq!(r.hardness[&HardnessCategory::Medium], 5);
    assert_eq!(r.hardness[&HardnessCategory::Hard], 0);
    assert_eq!(r.hardness[&HardnessCategory::ExtraHard], 1);
    assert_eq!(r.table_coverage, 1.0);
    // customer.{id,name}, purchase.{customer_id,product_id}, product.{id,name,price}.
    let total: usize = schema.tables.iter().map(|t| t.attributes.len()).sum();
    assert!((r.attribute_coverage - 7.0 / total as f64).abs() < 1e-12);
    let table = r.to_table();
    assert!(table.contains("Avg. Join"));
    assert!(
        table.contains("Extra Hard") || table.contains("ExtraHard"),
        "{table}"
    );
}

#[test]
fn avg_joins_is_the_mean_join_count() {
    let corpus = synthetic_corpus();
    let schema = Fixture::Shop.in_memory().load_schema().unwrap();
    let mean = corpus
        .iter()
        .map(|t| component_counts(t).get(OperationKind::Join) as f64)
        .sum::<f64>()
        / 10.0;
    let r = corpus_report(&corpus, &schema, &[]).unwrap();
    assert!((r.ratios.avg_joins - mean).abs() < 1e-12);
}

#[test]
fn questions_feed_token_statistics() {
    let schema = Fixture::Shop.in_memory().load_schema().unwrap();
    let questions: Vec<Vec<String>> = vec![
        "Who bought a pen ?".split(' ').map(String::from).collect(),
        "How many products are there ?"
            .split(' ')
            .map(String::from)
            .collect(),
    ];
    let r = corpus_report(&synthetic_corpus()[..2], &schema, &questions).unwrap();
    assert_eq!(r.avg_tokens, Some(5.5));
    let types: BTreeSet<String> = questions
        .concat()
        .iter()
        .map(|t| t.to_lowercase())
        .collect();
    assert_eq!(types.len(), 10);
    assert_eq!(r.msttr, None);
}
