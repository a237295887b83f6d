//! Random relations and relational expressions shared by the property tests.

use proptest::prelude::*;

use sqlsheet_core::ra::{CmpOp, Database, Datum, Predicate, RAExpr, Relation, ScalarExpr};

pub fn datum() -> impl Strategy<Value = Datum> {
    prop_oneof![
        1 => Just(Datum::Null),
        3 => (0..4).prop_map(|n| Datum::Number(f64::from(n))),
        2 => prop::sample::select(vec!["a", "B", "b", "ab"]).prop_map(Datum::text),
    ]
}

pub fn relation(arity: usize) -> impl Strategy<Value = Relation> {
    prop::collection::vec(prop::collection::vec(datum(), arity), 0..6).prop_map(move |rows| Relation::from_rows(arity, rows))
}

pub fn database() -> impl Strategy<Value = Database> {
    (relation(2), relation(2), relation(3)).prop_map(|(r, s, t)| {
        [("r", r), ("s", s), ("t", t)].into_iter().map(|(n, rel)| (n.to_string(), rel)).collect()
    })
}

pub fn leaf() -> impl Strategy<Value = RAExpr> {
    prop_oneof![
        Just(RAExpr::reference("r", 2)),
        Just(RAExpr::reference("s", 2)),
        Just(RAExpr::Project(Box::new(RAExpr::reference("t", 3)), vec![3, 1])),
    ]
}

pub fn predicate() -> impl Strategy<Value = Predicate> {
    let cmp = prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge]);
    let atom = prop_oneof![
        (cmp.clone(), 1..=2usize, 1..=2usize)
            .prop_map(|(op, a, b)| Predicate::Compare(op, ScalarExpr::Column(a), ScalarExpr::Column(b))),
        (cmp, 1..=2usize, datum())
            .prop_map(|(op, a, d)| Predicate::Compare(op, ScalarExpr::Column(a), ScalarExpr::Literal(d))),
        (1..=2usize).prop_map(|a| Predicate::IsNull(ScalarExpr::Column(a))),
    ];
    atom.prop_recursive(2, 6, 2, |p| {
        prop_oneof![
            (p.clone(), p.clone()).prop_map(|(a, b)| Predicate::And(Box::new(a), Box::new(b))),
            (p.clone(), p.clone()).prop_map(|(a, b)| Predicate::Or(Box::new(a), Box::new(b))),
            p.prop_map(|a| Predicate::Not(Box::new(a))),
        ]
    })
}

/// Binary relations built from the operators that preserve arity 2.
pub fn expr2() -> impl Strategy<Value = RAExpr> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        let b = |e: RAExpr| Box::new(e);
        prop_oneof![
            (inner.clone(), predicate()).prop_map(move |(e, p)| RAExpr::Select(b(e), p)),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| RAExpr::UnionSet(b(l), b(r))),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| RAExpr::DiffSet(b(l), b(r))),
            (inner.clone(), inner.clone()).prop_map(move |(l, r)| RAExpr::IntersectSet(b(l), b(r))),
            (inner.clone(), inner.clone(), 1..=2usize, 1..=2usize)
                .prop_map(move |(l, r, i, j)| RAExpr::Semijoin(b(l), b(r), i, j)),
            (inner.clone(), inner.clone(), 1..=2usize, 1..=2usize)
                .prop_map(move |(l, r, i, j)| RAExpr::Project(b(RAExpr::EqJoin(b(l), b(r), i, j)), vec![2, 3])),
            inner.clone().prop_map(move |e| RAExpr::Project(b(e), vec![2, 1])),
            inner.prop_map(move |e| RAExpr::DeDup(b(e))),
        ]
    })
}
