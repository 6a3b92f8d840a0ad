//! Trees over the shop fixture, at least one per operation kind, including
//! argmin/argmax ties and set operations that must deduplicate.

use otforge_core::{
    AttrRef, Comparator, GroupVariant, Literal, Node, Op, OperationKind, OperationTree,
};

pub fn a(rel: &str, col: &str) -> AttrRef {
    AttrRef::new(rel, col)
}

pub fn sel(rel: &str, col: &str, cmp: Comparator, v: Literal, child: Node) -> Node {
    Node::selection(a(rel, col), cmp, v, child)
}

pub fn text(s: &str) -> Literal {
    Literal::Text(s.into())
}

pub fn list(attrs: &[(&str, &str)], t: Node) -> OperationTree {
    OperationTree::new(Node::done(Node::projection(
        attrs.iter().map(|(r, c)| a(r, c)).collect(),
        t,
    )))
}

pub fn root(op: Op, t: Node) -> OperationTree {
    OperationTree::new(Node::unary(op, t))
}

pub fn purchases_with_products() -> Node {
    Node::join(
        a("purchase", "product_id"),
        a("product", "id"),
        Node::get_data("purchase"),
        Node::get_data("product"),
    )
}

pub fn customers_who_bought(product: &str) -> Node {
    Node::join(
        a("customer", "id"),
        a("purchase", "customer_id"),
        Node::get_data("customer"),
        Node::join(
            a("purchase", "product_id"),
            a("product", "id"),
            Node::get_data("purchase"),
            sel(
                "product",
                "name",
                Comparator::Eq,
                text(product),
                Node::get_data("product"),
            ),
        ),
    )
}

pub fn cheap_products() -> Node {
    sel(
        "product",
        "price",
        Comparator::Le,
        Literal::Real(3.0),
        Node::get_data("product"),
    )
}

pub fn office_products() -> Node {
    sel(
        "product",
        "category",
        Comparator::Eq,
        text("office"),
        Node::get_data("product"),
    )
}

/// One or more trees exercising each operation kind.
pub fn shop_corpus() -> Vec<(OperationKind, OperationTree)> {
    use Comparator::*;
    use OperationKind as K;
    vec![
        (
            K::GetData,
            list(
                &[("customer", "name"), ("customer", "city")],
                Node::get_data("customer"),
            ),
        ),
        (
            K::Selection,
            list(
                &[("customer", "name")],
                sel(
                    "customer",
                    "city",
                    Ne,
                    text("Zurich"),
                    Node::get_data("customer"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("customer", "name")],
                sel(
                    "customer",
                    "city",
                    Contains,
                    text("UR"),
                    Node::get_data("customer"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("product", "name")],
                sel(
                    "product",
                    "price",
                    Le,
                    Literal::Real(2.5),
                    Node::get_data("product"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("product", "name")],
                sel(
                    "product",
                    "price",
                    Gt,
                    Literal::Integer(3),
                    Node::get_data("product"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("customer", "name")],
                sel(
                    "customer",
                    "vip",
                    Eq,
                    Literal::Boolean(true),
                    Node::get_data("customer"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("customer", "name")],
                sel(
                    "customer",
                    "vip",
                    Ne,
                    Literal::Boolean(true),
                    Node::get_data("customer"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("purchase", "id")],
                sel(
                    "purchase",
                    "day",
                    Ge,
                    text("2023-02-11"),
                    Node::get_data("purchase"),
                ),
            ),
        ),
        (
            K::Selection,
            list(
                &[("purchase", "id")],
                sel(
                    "purchase",
                    "qty",
                    Lt,
                    Literal::Integer(3),
                    Node::get_data("purchase"),
                ),
            ),
        ),
        (
            K::Join,
            list(
                &[("product", "name"), ("purchase", "qty")],
                purchases_with_products(),
            ),
        ),
        (
            K::Join,
            list(
                &[("customer", "name"), ("product", "name")],
                customers_who_bought("Pen"),
            ),
        ),
        (
            K::Union,
            list(
                &[("product", "name")],
                Node::binary(Op::Union, cheap_products(), office_products()),
            ),
        ),
        (
            K::Intersect,
            list(
                &[("product", "name")],
                Node::binary(Op::Intersect, cheap_products(), office_products()),
            ),
        ),
        (
            K::Diff,
            list(
                &[("product", "name")],
                Node::binary(Op::Diff, office_products(), cheap_products()),
            ),
        ),
        (
            K::Intersect,
            list(
                &[("customer", "name")],
                Node::binary(
                    Op::Intersect,
                    customers_who_bought("Pen"),
                    customers_who_bought("Lamp"),
                ),
            ),
        ),
        (
            K::Union,
            root(
                Op::Count,
                Node::binary(
                    Op::Union,
                    customers_who_bought("Pen"),
                    customers_who_bought("Pad"),
                ),
            ),
        ),
        (
            K::Diff,
            root(
                Op::Count,
                Node::binary(
                    Op::Diff,
                    customers_who_bought("Pen"),
                    customers_who_bought("Lamp"),
                ),
            ),
        ),
        (
            K::Min,
            list(
                &[("product", "name")],
                Node::unary(
                    Op::Min {
                        attribute: a("product", "price"),
                    },
                    Node::get_data("product"),
                ),
            ),
        ),
        (
            K::Max,
            list(
                &[("purchase", "id")],
                Node::unary(
                    Op::Max {
                        attribute: a("purchase", "qty"),
                    },
                    Node::get_data("purchase"),
                ),
            ),
        ),
        (
            K::Max,
            list(
                &[("customer", "name")],
                Node::unary(
                    Op::Max {
                        attribute: a("product", "price"),
                    },
                    customers_who_bought("Pen"),
                ),
            ),
        ),
        (
            K::Min,
            list(
                &[("purchase", "id")],
                Node::unary(
                    Op::Min {
                        attribute: a("purchase", "day"),
                    },
                    Node::get_data("purchase"),
                ),
            ),
        ),
        (
            K::GroupBy,
            root(
                Op::GroupBy {
                    variant: GroupVariant::Avg,
                    group_attribute: a("product", "category"),
                    aggregation_attribute: a("product", "price"),
                },
                Node::get_data("product"),
            ),
        ),
        (
            K::GroupBy,
            root(
                Op::GroupBy {
                    variant: GroupVariant::Sum,
                    group_attribute: a("purchase", "customer_id"),
                    aggregation_attribute: a("purchase", "qty"),
                },
                Node::get_data("purchase"),
            ),
        ),
        (
            K::GroupBy,
            root(
                Op::GroupBy {
                    variant: GroupVariant::Count,
                    group_attribute: a("product", "name"),
                    aggregation_attribute: a("purchase", "qty"),
                },
                purchases_with_products(),
            ),
        ),
        (
            K::Projection,
            list(&[("product", "name")], purchases_with_products()),
        ),
        (
            K::Distinct,
            list(
                &[("customer", "name")],
                Node::unary(Op::Distinct, customers_who_bought("Pen")),
            ),
        ),
        (
            K::Distinct,
            root(
                Op::Count,
                Node::unary(
                    Op::Distinct,
                    Node::join(
                        a("customer", "id"),
                        a("purchase", "customer_id"),
                        Node::get_data("customer"),
                        Node::get_data("purchase"),
                    ),
                ),
            ),
        ),
        (K::Count, root(Op::Count, Node::get_data("purchase"))),
        (
            K::Count,
            root(
                Op::Count,
                sel(
                    "product",
                    "name",
                    Eq,
                    text("Chair"),
                    Node::get_data("product"),
                ),
            ),
        ),
        (
            K::Sum,
            root(
                Op::Sum {
                    attribute: a("purchase", "qty"),
                },
                Node::get_data("purchase"),
            ),
        ),
        (
            K::Sum,
            root(
                Op::Sum {
                    attribute: a("product", "price"),
                },
                office_products(),
            ),
        ),
        (
            K::Sum,
            root(
                Op::Sum {
                    attribute: a("purchase", "qty"),
                },
                sel(
                    "purchase",
                    "id",
                    Gt,
                    Literal::Integer(100),
                    Node::get_data("purchase"),
                ),
            ),
        ),
        (
            K::Average,
            root(
                Op::Average {
                    attribute: a("purchase", "qty"),
                },
                Node::get_data("purchase"),
            ),
        ),
        (
            K::Average,
            root(
                Op::Average {
                    attribute: a("product", "price"),
                },
                cheap_products(),
            ),
        ),
        (
            K::IsEmpty,
            root(
                Op::IsEmpty,
                sel(
                    "product",
                    "name",
                    Eq,
                    text("Chair"),
                    Node::get_data("product"),
                ),
            ),
        ),
        (K::IsEmpty, root(Op::IsEmpty, office_products())),
        (
            K::Done,
            list(&[("customer", "name")], Node::get_data("customer")),
        ),
    ]
}
