//! Hand-built trees for the movie fixture, with equivalent hand-written SQL.

use otforge_core::{AttrRef, Comparator, Literal, Node, Op, OperationTree};

fn a(rel: &str, col: &str) -> AttrRef {
    AttrRef::new(rel, col)
}

/// "Who starred in 'The Notebook'?"
pub fn notebook_cast() -> OperationTree {
    let movie = Node::selection(
        a("movie", "title"),
        Comparator::Eq,
        Literal::Text("The Notebook".into()),
        Node::get_data("movie"),
    );
    let with_cast = Node::join(
        a("movie", "id"),
        a("cast", "movie_id"),
        movie,
        Node::get_data("cast"),
    );
    let with_person = Node::join(
        a("cast", "person_id"),
        a("person", "id"),
        with_cast,
        Node::get_data("person"),
    );
    OperationTree::new(Node::done(Node::projection(
        vec![a("person", "name")],
        with_person,
    )))
    .with_id("notebook-cast")
}

pub const NOTEBOOK_CAST_SQL: &str = "SELECT p.name FROM person p \
    JOIN \"cast\" c ON c.person_id = p.id \
    JOIN movie m ON m.id = c.movie_id \
    WHERE m.title = 'The Notebook'";

/// "What is the average movie vote of different movies having an Oscar
/// nominee with a cast character called Jesse and were nominated for an
/// Oscar in the year 1991 or later?"
pub fn jesse_vote() -> OperationTree {
    let cast = Node::selection(
        a("cast", "character"),
        Comparator::Eq,
        Literal::Text("Jesse".into()),
        Node::get_data("cast"),
    );
    let oscar = Node::selection(
        a("oscar", "year"),
        Comparator::Ge,
        Literal::Integer(1991),
        Node::get_data("oscar"),
    );
    let t = Node::join(
        a("movie", "id"),
        a("cast", "movie_id"),
        Node::get_data("movie"),
        cast,
    );
    let t = Node::join(
        a("cast", "person_id"),
        a("person", "id"),
        t,
        Node::get_data("person"),
    );
    let t = Node::join(
        a("person", "id"),
        a("oscar_nominee", "person_id"),
        t,
        Node::get_data("oscar_nominee"),
    );
    let t = Node::join(a("oscar_nominee", "oscar_id"), a("oscar", "id"), t, oscar);
    let t = Node::unary(Op::Distinct, t);
    OperationTree::new(Node::unary(
        Op::Average {
            attribute: a("movie", "vote_average"),
        },
        t,
    ))
    .with_id("jesse-vote")
}

pub const JESSE_VOTE_SQL: &str = "SELECT AVG(vote_average) FROM movie WHERE id IN (\
    SELECT c.movie_id FROM \"cast\" c \
    JOIN person p ON p.id = c.person_id \
    JOIN oscar_nominee n ON n.person_id = p.id \
    JOIN oscar o ON o.id = n.oscar_id \
    WHERE c.character = 'Jesse' AND o.year >= 1991)";

/// `Done(Projection(t.c, GetData(t)))`.
pub fn minimal(table: &str, column: &str) -> OperationTree {
    OperationTree::new(Node::done(Node::projection(
        vec![a(table, column)],
        Node::get_data(table),
    )))
}
