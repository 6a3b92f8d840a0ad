mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{count_after, service, service_with, three_trees};
use otforge_annotation::{
    ConstraintEdit, Phase, Service, ServiceConfig, ServiceError, SkipReason, Store, TokenAssignment,
};
use otforge_core::ot::{parse, serialize, validate};
use otforge_core::{Comparator, Literal, Node, NodePath, OperationTree};
use otforge_testkit::{trees, Fixture};

fn path(s: &str) -> NodePath {
    s.parse().unwrap()
}

/// Leases the next phase-1 task for `who` and writes `question` for it.
fn write(svc: &Service, who: &str, question: &str) -> i64 {
    let t = svc.next_task(who, Phase::Phase1Pending).unwrap().unwrap();
    svc.submit_question(t.task_id, who, question).unwrap();
    t.task_id
}

#[test]
fn batch_creation_is_idempotent() {
    let (svc, _) = service();
    let batch: Vec<OperationTree> = (0..100).map(|i| count_after(1900 + i)).collect();
    let ids = svc.create_tasks(&batch, Some("batch-1")).unwrap();
    assert_eq!(ids.len(), 100);
    assert_eq!(svc.create_tasks(&batch, Some("batch-1")).unwrap(), ids);
    let count: i64 = svc.with_store(|s| {
        s.connection()
            .query_row("SELECT COUNT(*) FROM tasks", [], |r| r.get(0))
            .unwrap()
    });
    assert_eq!(count, 100);
    assert!(matches!(
        svc.create_tasks(&batch[..99], Some("batch-1")),
        Err(ServiceError::IdempotencyConflict(_))
    ));
    for id in ids {
        assert_eq!(svc.task(id).unwrap().phase, Phase::Phase1Pending);
    }
}

#[test]
fn invalid_trees_are_rejected_with_a_node_path() {
    let (svc, _) = service();
    let bad = OperationTree::new(Node::unary(
        otforge_core::Op::Count,
        Node::get_data("studio"),
    ));
    match svc.create_tasks(&[trees::notebook_cast(), bad], None) {
        Err(ServiceError::InvalidTree { index, violations }) => {
            assert_eq!(index, 1);
            assert_eq!(violations[0].path.to_string(), "/0");
        }
        other => panic!("{other:?}"),
    }
    let foreign = trees::notebook_cast().with_schema("chinook");
    assert!(matches!(
        svc.create_tasks(&[foreign], None),
        Err(ServiceError::SchemaMismatch { .. })
    ));
    assert!(svc.next_task("a", Phase::Phase1Pending).unwrap().is_none());
}

#[test]
fn leases_are_exclusive_until_they_expire() {
    let (svc, clock) = service();
    svc.create_tasks(&three_trees()[..2], None).unwrap();
    let a = svc.next_task("ann", Phase::Phase1Pending).unwrap().unwrap();
    let b = svc.next_task("bob", Phase::Phase1Pending).unwrap().unwrap();
    assert_ne!(a.task_id, b.task_id);
    // Asking again returns the lease already held.
    assert_eq!(
        svc.next_task("ann", Phase::Phase1Pending)
            .unwrap()
            .unwrap()
            .task_id,
        a.task_id
    );
    assert!(svc
        .next_task("cid", Phase::Phase1Pending)
        .unwrap()
        .is_none());

    clock.advance_secs(29 * 60);
    svc.renew_lease(a.task_id, "ann").unwrap();
    clock.advance_secs(2 * 60);
    // Bob's lease ran out; Ann's was renewed.
    let c = svc.next_task("cid", Phase::Phase1Pending).unwrap().unwrap();
    assert_eq!(c.task_id, b.task_id);
    assert!(matches!(
        svc.submit_question(b.task_id, "bob", "Who?"),
        Err(ServiceError::NotLeased { .. })
    ));
    svc.submit_question(a.task_id, "ann", "Who starred in 'The Notebook'?")
        .unwrap();

    clock.advance_secs(31 * 60);
    assert!(matches!(
        svc.submit_question(c.task_id, "cid", "Late?"),
        Err(ServiceError::LeaseExpired(_))
    ));
}

#[test]
fn concurrent_clients_get_disjoint_tasks() {
    let (svc, _) = service();
    let batch: Vec<OperationTree> = (0..40).map(|i| count_after(1900 + i)).collect();
    svc.create_tasks(&batch, None).unwrap();
    let svc = Arc::new(svc);
    let handles: Vec<_> = (0..2)
        .map(|client| {
            let svc = svc.clone();
            std::thread::spawn(move || {
                (0..20)
                    .filter_map(|k| {
                        svc.next_task(&format!("c{client}-{k}"), Phase::Phase1Pending)
                            .unwrap()
                            .map(|t| t.task_id)
                    })
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let got: Vec<Vec<i64>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let all: BTreeSet<i64> = got.iter().flatten().copied().collect();
    assert_eq!(all.len(), got[0].len() + got[1].len());
    assert_eq!(all.len(), 40);
}

#[test]
fn phase_two_goes_to_a_different_annotator() {
    let (svc, _) = service();
    svc.create_tasks(&[trees::notebook_cast()], None).unwrap();
    let id = write(&svc, "ann", "Who starred in 'The Notebook'?");
    let task = svc.task(id).unwrap();
    assert_eq!(task.phase, Phase::Phase2Pending);
    let edges: Vec<(Option<Phase>, Phase)> =
        task.transitions.iter().map(|t| (t.from, t.to)).collect();
    assert_eq!(
        edges,
        [
            (None, Phase::Phase1Pending),
            (Some(Phase::Phase1Pending), Phase::Phase1Done),
            (Some(Phase::Phase1Done), Phase::Phase2Pending)
        ]
    );
    assert!(svc
        .next_task("ann", Phase::Phase2Pending)
        .unwrap()
        .is_none());
    assert_eq!(
        svc.next_task("bob", Phase::Phase2Pending)
            .unwrap()
            .unwrap()
            .task_id,
        id
    );
}

#[test]
fn adaptation_must_keep_a_non_empty_answer() {
    let (svc, _) = service();
    let id = svc.create_tasks(&[trees::jesse_vote()], None).unwrap()[0];
    svc.next_task("ann", Phase::Phase1Pending).unwrap();
    let year = trees::jesse_vote()
        .root
        .preorder()
        .into_iter()
        .find(|(_, n)| matches!(&n.op, otforge_core::Op::Selection { attribute, .. } if attribute.column == "year"))
        .unwrap()
        .0;
    let edit = |v: i64| ConstraintEdit {
        node_path: year.clone(),
        comparator: None,
        value: Some(Literal::Integer(v)),
    };
    assert!(matches!(
        svc.adapt_constraints(id, "ann", &[edit(2100)]),
        Err(ServiceError::EmptyResult)
    ));
    let t = svc.adapt_constraints(id, "ann", &[edit(2000)]).unwrap();
    assert_ne!(t.tree, t.original_tree);
    assert_eq!(t.original_tree, trees::jesse_vote().with_schema("memory"));

    let join = ConstraintEdit {
        node_path: path("/0"),
        comparator: Some(Comparator::Eq),
        value: None,
    };
    assert!(matches!(
        svc.adapt_constraints(id, "ann", &[join]),
        Err(ServiceError::StructuralEdit(_))
    ));
    let mut restructured = t.tree.clone();
    restructured.root.children[0] = Node::get_data("movie");
    assert!(matches!(
        svc.adapt_to_tree(id, "ann", &restructured),
        Err(ServiceError::StructuralEdit(_))
    ));
    let mut text_value = t.tree.clone();
    if let otforge_core::Op::Selection { value, .. } =
        &mut text_value.root.at_mut(&year).unwrap().op
    {
        *value = Literal::Text("soon".into());
    }
    assert!(matches!(
        svc.adapt_to_tree(id, "ann", &text_value),
        Err(ServiceError::InvalidAdaptation(_))
    ));
    assert!(matches!(
        svc.adapt_constraints(id, "bob", &[edit(1995)]),
        Err(ServiceError::NotLeased { .. })
    ));
}

#[test]
fn adaptation_through_a_full_tree() {
    let (svc, _) = service();
    let id = svc.create_tasks(&[count_after(2000)], None).unwrap()[0];
    svc.next_task("ann", Phase::Phase1Pending).unwrap();
    let t = svc.adapt_to_tree(id, "ann", &count_after(1990)).unwrap();
    assert_eq!(t.tree.root, count_after(1990).root);
}

#[test]
fn skipped_tasks_leave_the_queue() {
    let (svc, _) = service();
    let nonsense = OperationTree::new(Node::unary(
        otforge_core::Op::Average {
            attribute: otforge_core::AttrRef::new("oscar", "year"),
        },
        Node::get_data("oscar"),
    ));
    let id = svc.create_tasks(&[nonsense], None).unwrap()[0];
    svc.next_task("ann", Phase::Phase1Pending).unwrap();
    let t = svc
        .skip_task(
            id,
            "ann",
            SkipReason::Nonsensical,
            Some("average year".into()),
        )
        .unwrap();
    assert_eq!(t.phase, Phase::Skipped);
    assert_eq!(t.skip.unwrap().reason, SkipReason::Nonsensical);
    assert!(svc
        .next_task("bob", Phase::Phase1Pending)
        .unwrap()
        .is_none());
    assert!(matches!(
        svc.skip_task(id, "ann", SkipReason::Other, None),
        Err(ServiceError::WrongPhase { .. })
    ));
}

#[test]
fn prematch_finds_the_quoted_title() {
    let (svc, _) = service();
    let id = svc.create_tasks(&[trees::notebook_cast()], None).unwrap()[0];
    assert!(matches!(
        svc.prematch(id),
        Err(ServiceError::WrongPhase { .. })
    ));
    write(&svc, "ann", "Who starred in 'The Notebook'?");
    let s = svc.prematch(id).unwrap();
    assert_eq!(s.len(), 1);
    let tokens = svc.task(id).unwrap().question.unwrap().tokens;
    let picked: Vec<&str> = s[0]
        .token_indices
        .iter()
        .map(|&i| tokens[i].as_str())
        .collect();
    assert_eq!(picked, ["The", "Notebook"]);
}

#[test]
fn token_assignments_are_checked() {
    let (svc, clock) = service();
    let id = svc.create_tasks(&[trees::notebook_cast()], None).unwrap()[0];
    clock.advance_secs(5);
    write(&svc, "ann", "Who starred in 'The Notebook'?");
    svc.next_task("bob", Phase::Phase2Pending).unwrap().unwrap();
    let out_of_range = vec![TokenAssignment {
        node_path: path("/0"),
        token_indices: vec![99],
    }];
    assert!(matches!(
        svc.submit_tokens(id, "bob", None, out_of_range),
        Err(ServiceError::TokenOutOfRange { index: 99, .. })
    ));
    let unknown = vec![TokenAssignment {
        node_path: path("/0/5"),
        token_indices: vec![],
    }];
    assert!(matches!(
        svc.submit_tokens(id, "bob", None, unknown),
        Err(ServiceError::UnknownNodePath(_))
    ));
    clock.advance_secs(42);
    // "starred" (token 1) goes to the Join linking cast and person.
    let starred = vec![TokenAssignment {
        node_path: path("/0/0"),
        token_indices: vec![1],
    }];
    let t = svc.submit_tokens(id, "bob", None, starred.clone()).unwrap();
    assert_eq!(t.phase, Phase::Phase2Done);
    assert_eq!(t.token_assignments, starred);
    assert_eq!(t.phase2_seconds, Some(42.0));
}

#[test]
fn empty_assignments_and_corrected_questions_are_accepted() {
    let (svc, _) = service();
    let id = svc.create_tasks(&[count_after(2000)], None).unwrap()[0];
    write(&svc, "ann", "how many movies after 2000");
    svc.next_task("bob", Phase::Phase2Pending).unwrap();
    let t = svc
        .submit_tokens(
            id,
            "bob",
            Some("How many movies came out after 2000?"),
            vec![],
        )
        .unwrap();
    let q = t.question.unwrap();
    assert_eq!(q.tokens.len(), 8);
    assert_eq!(q.tokens[0], "How");
}

#[test]
fn export_lists_finished_tasks_with_timings() {
    let (svc, clock) = service();
    svc.create_tasks(&three_trees(), None).unwrap();
    for (i, q) in [
        "Who starred in 'The Notebook'?",
        "What is the average vote of movies with a Jesse nominated since 1991?",
        "How many movies came out after 2000?",
    ]
    .iter()
    .enumerate()
    {
        let t = svc.next_task("ann", Phase::Phase1Pending).unwrap().unwrap();
        clock.advance_secs(10 * (i as i64 + 1));
        svc.submit_question(t.task_id, "ann", q).unwrap();
    }
    for i in 0..3 {
        let t = svc.next_task("bob", Phase::Phase2Pending).unwrap().unwrap();
        clock.advance_secs(20 * (i + 1));
        svc.submit_tokens(t.task_id, "bob", None, vec![]).unwrap();
    }
    let out = svc.export(None).unwrap();
    assert_eq!(out.report.query_count, 3);
    assert_eq!(out.report.question_count, 3);
    assert_eq!(out.timing.mean_phase1_seconds, Some(20.0));
    assert_eq!(out.timing.mean_phase2_seconds, Some(40.0));
    let ids: Vec<i64> = out.records.iter().map(|r| r.task_id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    for r in &out.records {
        let text = serde_json::to_string(r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let tree = parse(&v["tree"].to_string()).unwrap();
        assert!(validate(&tree, svc.schema()).is_empty());
        assert_eq!(serialize(&tree), serialize(&r.tree));
        assert_ne!(r.annotators.phase1, r.annotators.phase2);
    }
    assert_eq!(
        svc.export(Some(Phase::Phase2Done)).unwrap().records.len(),
        3
    );
    assert!(matches!(
        svc.export(Some(Phase::Phase2Pending)),
        Err(ServiceError::NotExportable(_))
    ));
}

#[test]
fn without_token_assignment_phase_one_is_final() {
    let (svc, _) = service_with(ServiceConfig {
        token_assignment: false,
        ..ServiceConfig::default()
    });
    svc.create_tasks(&[trees::notebook_cast()], None).unwrap();
    let id = write(&svc, "ann", "Who starred in 'The Notebook'?");
    assert_eq!(svc.task(id).unwrap().phase, Phase::Phase1Done);
    assert!(svc
        .next_task("bob", Phase::Phase2Pending)
        .unwrap()
        .is_none());
    let out = svc.export(None).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.timing.mean_phase2_seconds, None);
}

#[test]
fn file_store_survives_reopening() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tasks.sqlite");
    let id = {
        let svc = Service::new(
            Store::open(&path).unwrap(),
            Fixture::Movies.in_memory(),
            ServiceConfig::default(),
        )
        .unwrap();
        svc.create_tasks(&[trees::notebook_cast()], Some("k"))
            .unwrap()[0]
    };
    let svc = Service::new(
        Store::open(&path).unwrap(),
        Fixture::Movies.in_memory(),
        ServiceConfig::default(),
    )
    .unwrap();
    assert_eq!(svc.task(id).unwrap().tree.root, trees::notebook_cast().root);
    assert_eq!(
        svc.create_tasks(&[trees::notebook_cast()], Some("k"))
            .unwrap(),
        vec![id]
    );
    let other = Service::new(
        Store::open(&path).unwrap(),
        Fixture::Shop.in_memory(),
        ServiceConfig::default(),
    );
    // Both fixtures load under the schema id "memory"; a renamed schema is refused.
    assert!(other.is_ok());
    let mut store = Store::open(&path).unwrap();
    let mut schema = Fixture::Shop.in_memory().load_schema().unwrap();
    schema.id = "shop".into();
    assert!(matches!(
        store.bind_schema(&schema),
        Err(ServiceError::SchemaMismatch { .. })
    ));
}

#[test]
fn detail_walks_nodes_root_first_with_results() {
    let (svc, _) = service();
    let id = svc.create_tasks(&[trees::notebook_cast()], None).unwrap()[0];
    let d = svc.task_detail(id).unwrap();
    let paths: Vec<&str> = d.node_order.iter().map(|n| n.node_path.as_str()).collect();
    assert_eq!(
        paths,
        [
            "/",
            "/0",
            "/0/0",
            "/0/0/0",
            "/0/0/0/0",
            "/0/0/0/0/0",
            "/0/0/0/1",
            "/0/0/1"
        ]
    );
    assert!(d
        .node_order
        .iter()
        .all(|n| !n.hint.is_empty() && n.error.is_none()));
    assert_eq!(d.node_order[0].result.as_ref().unwrap().len(), 2);
    assert_eq!(d.constraints.len(), 1);
    assert_eq!(d.constraints[0].value, "The Notebook");
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

    #[test]
    fn phase_history_stays_legal(calls in proptest::collection::vec((0u8..6, 0usize..3, 0usize..3), 1..40)) {
        let (svc, clock) = service();
        let ids = svc.create_tasks(&three_trees(), None).unwrap();
        let who = ["ann", "bob", "cid"];
        for (op, w, t) in calls {
            let (w, id) = (who[w], ids[t]);
            let _ = match op {
                0 => svc.next_task(w, Phase::Phase1Pending).map(|_| ()),
                1 => svc.next_task(w, Phase::Phase2Pending).map(|_| ()),
                2 => svc.submit_question(id, w, "How many?").map(|_| ()),
                3 => svc.skip_task(id, w, SkipReason::Other, None).map(|_| ()),
                4 => svc.submit_tokens(id, w, None, vec![]).map(|_| ()),
                _ => {
                    clock.advance_secs(20 * 60);
                    Ok(())
                }
            };
        }
        let history = svc.with_store(|s| otforge_annotation::store::all_transitions(s.connection())).unwrap();
        for (_, t) in &history {
            match t.from {
                None => proptest::prop_assert_eq!(t.to, Phase::Phase1Pending),
                Some(from) => proptest::prop_assert!(from.can_transition(t.to), "{from} -> {}", t.to),
            }
        }
        for id in ids {
            let task = svc.task(id).unwrap();
            proptest::prop_assert_eq!(task.transitions.last().map(|t| t.to), Some(task.phase));
            if let (Some(a), Some(b)) = (&task.phase1_annotator, &task.phase2_annotator) {
                proptest::prop_assert_ne!(a, b);
            }
        }
    }
}
