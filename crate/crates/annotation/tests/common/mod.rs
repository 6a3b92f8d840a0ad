#![allow(dead_code)]

use std::sync::Arc;

use otforge_annotation::{ManualClock, Service, ServiceConfig, Store};
use otforge_core::{AttrRef, Comparator, Literal, Node, Op, OperationTree};
use otforge_testkit::{trees, Fixture};

pub const START_MS: i64 = 1_700_000_000_000;

pub fn service_with(config: ServiceConfig) -> (Service, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(START_MS));
    let svc = Service::new(
        Store::open_in_memory().unwrap(),
        Fixture::Movies.in_memory(),
        config,
    )
    .unwrap()
    .with_clock(clock.clone());
    (svc, clock)
}

pub fn service() -> (Service, Arc<ManualClock>) {
    service_with(ServiceConfig::default())
}

/// "How many movies came out after <year>?"
pub fn count_after(year: i64) -> OperationTree {
    OperationTree::new(Node::unary(
        Op::Count,
        Node::selection(
            AttrRef::new("movie", "release_year"),
            Comparator::Gt,
            Literal::Integer(year),
            Node::get_data("movie"),
        ),
    ))
}

pub fn three_trees() -> Vec<OperationTree> {
    vec![
        trees::notebook_cast(),
        trees::jesse_vote(),
        count_after(2000),
    ]
}
