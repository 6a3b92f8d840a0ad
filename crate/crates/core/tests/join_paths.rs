use std::collections::BTreeSet;

use otforge_core::ot::validate;
use otforge_core::schema::{enumerate_join_paths, Attribute, ColumnRef, ForeignKey, Table};
use otforge_core::{AttrRef, ColumnType, Node, OperationTree, SchemaGraph};
use otforge_testkit::Fixture;
use proptest::prelude::*;

/// Every sequence of distinct edges, each taken in either orientation,
/// filtered down to the ones that chain from `start`.
fn brute_force(schema: &SchemaGraph, start: &str, length: usize) -> BTreeSet<Vec<String>> {
    let hops: Vec<(usize, ColumnRef, ColumnRef)> = schema
        .fk_edges
        .iter()
        .enumerate()
        .flat_map(|(i, fk)| {
            [
                (i, fk.from.clone(), fk.to.clone()),
                (i, fk.to.clone(), fk.from.clone()),
            ]
        })
        .collect();
    let mut out = BTreeSet::new();
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    for _ in 1..length {
        seqs = seqs
            .into_iter()
            .flat_map(|s| (0..hops.len()).map(move |h| [s.clone(), vec![h]].concat()))
            .collect();
    }
    'seq: for seq in seqs {
        let edges: BTreeSet<usize> = seq.iter().map(|&h| hops[h].0).collect();
        if edges.len() != seq.len() {
            continue;
        }
        let mut tables = vec![start.to_string()];
        let mut columns = vec![];
        for &h in &seq {
            let (_, l, r) = &hops[h];
            if l.table != *tables.last().unwrap() {
                continue 'seq;
            }
            tables.push(r.table.clone());
            columns.push(format!("{l}={r}"));
        }
        out.insert([tables, columns].concat());
    }
    out
}

fn graph_strategy() -> impl Strategy<Value = SchemaGraph> {
    (1usize..=6)
        .prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..=6)))
        .prop_map(|(n, edges)| {
            let mut tables: Vec<Table> = (0..n)
                .map(|i| {
                    Table::new(
                        format!("t{i}"),
                        vec![
                            Attribute::key("id", ColumnType::Integer),
                            Attribute::new("v", ColumnType::Text),
                        ],
                    )
                })
                .collect();
            let mut fks = Vec::new();
            for (k, (from, to)) in edges.into_iter().enumerate() {
                let col = format!("fk{k}");
                tables[from]
                    .attributes
                    .push(Attribute::new(&col, ColumnType::Integer));
                fks.push(ForeignKey::new(
                    ColumnRef::new(format!("t{from}"), col),
                    ColumnRef::new(format!("t{to}"), "id"),
                ));
            }
            SchemaGraph::new("g", tables, fks).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enumeration_matches_brute_force(schema in graph_strategy(), length in 1usize..=4) {
        let got: BTreeSet<Vec<String>> = enumerate_join_paths(&schema, "t0", length)
            .unwrap()
            .into_iter()
            .map(|p| {
                let cols = p.hops.iter().map(|h| format!("{}={}", h.left, h.right));
                p.tables.into_iter().chain(cols).collect()
            })
            .collect();
        prop_assert_eq!(got, brute_force(&schema, "t0", length));
    }

    #[test]
    fn paths_are_sorted_and_unique(schema in graph_strategy(), length in 1usize..=4) {
        let paths = enumerate_join_paths(&schema, "t0", length).unwrap();
        prop_assert!(paths.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(paths.iter().all(|p| p.len() == length && p.hops.len() == length - 1));
    }
}

#[test]
fn movie_to_oscar_path_exists() {
    let schema = Fixture::Movies.in_memory().load_schema().unwrap();
    let paths = enumerate_join_paths(&schema, "movie", 5).unwrap();
    assert!(paths
        .iter()
        .any(|p| p.tables == ["movie", "cast", "person", "oscar_nominee", "oscar"]));
}

#[test]
fn length_one_is_the_table_itself() {
    let schema = Fixture::Shop.in_memory().load_schema().unwrap();
    let paths = enumerate_join_paths(&schema, "product", 1).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].tables, ["product"]);
    assert!(enumerate_join_paths(&schema, "product", 0).is_err());
    assert!(enumerate_join_paths(&schema, "nope", 1).is_err());
}

#[test]
fn left_deep_joins_along_every_path_validate() {
    for fixture in [Fixture::Movies, Fixture::Shop] {
        let schema = fixture.in_memory().load_schema().unwrap();
        for table in &schema.tables {
            for length in 1..=3 {
                for path in enumerate_join_paths(&schema, &table.name, length).unwrap() {
                    let distinct: BTreeSet<&String> = path.tables.iter().collect();
                    if distinct.len() < path.tables.len() {
                        continue;
                    }
                    let mut t = Node::get_data(&path.tables[0]);
                    for hop in &path.hops {
                        t = Node::join(
                            AttrRef::new(&hop.left.table, &hop.left.column),
                            AttrRef::new(&hop.right.table, &hop.right.column),
                            t,
                            Node::get_data(&hop.right.table),
                        );
                    }
                    let col = &schema.table(&path.tables[0]).unwrap().attributes[0].name;
                    let tree = OperationTree::new(Node::done(Node::projection(
                        vec![AttrRef::new(&path.tables[0], col)],
                        t,
                    )));
                    assert_eq!(validate(&tree, &schema), vec![], "{:?}", path.tables);
                }
            }
        }
    }
}
