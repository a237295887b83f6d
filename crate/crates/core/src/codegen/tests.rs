use super::*;
use crate::ra::{oracle_eval, translate, AggOp, Aggregate, CmpOp, Direction, Predicate, ScalarExpr};
use crate::sql::{parse_ddl, parse_sql};

fn n(x: f64) -> Datum {
    Datum::Number(x)
}

fn t(s: &str) -> Datum {
    Datum::text(s)
}

fn r(name: &str, arity: usize) -> Box<RAExpr> {
    Box::new(RAExpr::reference(name, arity))
}

fn db(tables: &[(&str, usize, Vec<Tuple>)]) -> Database {
    tables
        .iter()
        .map(|(name, arity, rows)| (name.to_string(), Relation::from_rows(*arity, rows.clone())))
        .collect()
}

fn run(e: &RAExpr, d: &Database, height: u32) -> Vec<Tuple> {
    let plan = emit_plan(e, &[], height).unwrap();
    run_plan(&plan, d).unwrap()
}

/// Runs the sheet and compares with the oracle as sets.
fn agrees(e: &RAExpr, d: &Database) -> Vec<Tuple> {
    let rows = run(e, d, 16);
    let want = oracle_eval(e, d).unwrap();
    let got = Relation::from_rows(want.arity, rows.clone());
    assert!(
        got.same_set(&want),
        "sheet {:?}\noracle {:?}\nplan\n{}",
        rows,
        want.rows,
        emit_plan(e, &[], 16).unwrap().describe()
    );
    rows
}

#[test]
fn connections_end_to_end() {
    let schemas = parse_ddl("CREATE TABLE connections (departure TEXT, arrival TEXT, length INT)").unwrap();
    let q = parse_sql(
        "SELECT t1.departure, t2.arrival FROM connections t1 JOIN connections t2 ON t1.arrival = t2.departure \
         EXCEPT SELECT departure, arrival FROM connections",
        &schemas,
    )
    .unwrap();
    let e = translate(&q, &schemas).unwrap();
    let d = db(&[(
        "connections",
        3,
        vec![
            vec![t("Amsterdam"), t("Berlin"), n(650.0)],
            vec![t("Berlin"), t("Prague"), n(350.0)],
            vec![t("Prague"), t("Vienna"), n(330.0)],
            vec![t("Amsterdam"), t("Prague"), n(900.0)],
            vec![t("Berlin"), t("Vienna"), n(680.0)],
        ],
    )]);
    let plan = emit_plan(&e, &schemas, 32).unwrap();
    let rows = run_plan(&plan, &d).unwrap();
    let got = Relation::from_rows(2, rows);
    let want = Relation::from_rows(2, [vec![t("Amsterdam"), t("Vienna")]]);
    assert!(got.same_set(&want), "{:?}", got.rows);
    assert!(got.same_set(&oracle_eval(&e, &d).unwrap()));
}

#[test]
fn reference_is_copied_to_output() {
    let d = db(&[("t", 2, vec![vec![n(1.0), t("a")], vec![n(2.0), Datum::Null]])]);
    let plan = emit_plan(&RAExpr::reference("t", 2), &[], 4).unwrap();
    assert_eq!(plan.op_blocks.len(), 1);
    assert_eq!(plan.output_cols, vec![3, 4]);
    assert_eq!(
        run_plan(&plan, &d).unwrap(),
        vec![vec![n(1.0), t("a")], vec![n(2.0), Datum::Null]]
    );
}

#[test]
fn sort_orders_and_pads() {
    let d = db(&[("x", 1, vec![vec![n(3.0)], vec![n(1.0)], vec![n(2.0)]])]);
    let e = RAExpr::Sort(r("x", 1), 1, Direction::Asc);
    assert_eq!(run(&e, &d, 4), vec![vec![n(1.0)], vec![n(2.0)], vec![n(3.0)]]);
    let e = RAExpr::Sort(r("x", 1), 1, Direction::Desc);
    assert_eq!(run(&e, &d, 4), vec![vec![n(3.0)], vec![n(2.0)], vec![n(1.0)]]);
}

#[test]
fn sort_is_stable() {
    let d = db(&[(
        "x",
        2,
        vec![
            vec![n(2.0), t("a")],
            vec![n(2.0), t("b")],
            vec![n(1.0), t("c")],
            vec![Datum::Null, t("d")],
        ],
    )]);
    let e = RAExpr::Sort(r("x", 2), 1, Direction::Asc);
    let want = oracle_eval(&e, &d).unwrap().rows;
    assert_eq!(run(&e, &d, 6), want);
    let e = RAExpr::Sort(r("x", 2), 1, Direction::Desc);
    let want = oracle_eval(&e, &d).unwrap().rows;
    assert_eq!(run(&e, &d, 6), want);
}

#[test]
fn sort_orders_mixed_types_numbers_text_logicals() {
    let d = db(&[(
        "x",
        1,
        vec![
            vec![t("b")],
            vec![Datum::Bool(true)],
            vec![n(2.0)],
            vec![Datum::Null],
            vec![t("a")],
            vec![n(1.0)],
            vec![Datum::Bool(false)],
        ],
    )]);
    for dir in [Direction::Asc, Direction::Desc] {
        let e = RAExpr::Sort(r("x", 1), 1, dir);
        assert_eq!(run(&e, &d, 8), oracle_eval(&e, &d).unwrap().rows, "{dir:?}");
    }
}

#[test]
fn join_with_repeated_keys_of_mixed_types() {
    let d = db(&[(
        "r",
        2,
        vec![
            vec![t("a"), t("b")],
            vec![n(1.0), Datum::Null],
            vec![t("a"), n(1.0)],
            vec![n(0.0), Datum::Null],
        ],
    )]);
    let e = RAExpr::EqJoin(r("r", 2), r("r", 2), 1, 1);
    assert_eq!(agrees(&e, &d).len(), 6);
}

#[test]
fn dedup_removes_duplicates() {
    // duplicates arise from projection
    let d = db(&[(
        "x",
        3,
        vec![
            vec![n(1.0), t("a"), n(1.0)],
            vec![n(1.0), t("A"), n(2.0)],
            vec![n(2.0), t("b"), n(3.0)],
        ],
    )]);
    let e = RAExpr::Project(r("x", 3), vec![1, 2]);
    let rows = agrees(&e, &d);
    assert_eq!(rows.len(), 2);
}

#[test]
fn select_drops_unknown() {
    let d = db(&[("x", 1, vec![vec![n(1.0)], vec![n(3.0)], vec![Datum::Null]])]);
    let gt2 = Predicate::Compare(CmpOp::Gt, ScalarExpr::Column(1), ScalarExpr::Literal(n(2.0)));
    assert_eq!(agrees(&RAExpr::Select(r("x", 1), gt2.clone()), &d), vec![vec![n(3.0)]]);
    let not = Predicate::Not(Box::new(gt2));
    assert_eq!(agrees(&RAExpr::Select(r("x", 1), not), &d), vec![vec![n(1.0)]]);
    let is_null = Predicate::IsNull(ScalarExpr::Column(1));
    assert_eq!(agrees(&RAExpr::Select(r("x", 1), is_null), &d), vec![vec![Datum::Null]]);
}

#[test]
fn select_with_subqueries() {
    let d = db(&[
        ("x", 1, vec![vec![n(1.0)], vec![n(3.0)], vec![Datum::Null]]),
        ("y", 1, vec![vec![n(3.0)], vec![n(5.0)]]),
        ("z", 1, vec![vec![n(3.0)], vec![Datum::Null]]),
    ]);
    for (sub, negated) in [("y", false), ("y", true), ("z", false), ("z", true), ("x", true)] {
        let p = Predicate::In {
            expr: ScalarExpr::Column(1),
            rel: r(sub, 1),
            negated,
        };
        agrees(&RAExpr::Select(r("x", 1), p), &d);
        let p = Predicate::Exists { rel: r(sub, 1), negated };
        agrees(&RAExpr::Select(r("x", 1), p), &d);
    }
}

#[test]
fn three_valued_connectives() {
    let d = db(&[(
        "x",
        2,
        vec![
            vec![n(1.0), n(1.0)],
            vec![n(1.0), Datum::Null],
            vec![Datum::Null, n(5.0)],
            vec![n(5.0), n(5.0)],
            vec![Datum::Null, Datum::Null],
        ],
    )]);
    let a = Predicate::Compare(CmpOp::Lt, ScalarExpr::Column(1), ScalarExpr::Literal(n(3.0)));
    let b = Predicate::Compare(CmpOp::Gt, ScalarExpr::Column(2), ScalarExpr::Literal(n(3.0)));
    for p in [
        Predicate::And(Box::new(a.clone()), Box::new(b.clone())),
        Predicate::Or(Box::new(a.clone()), Box::new(b.clone())),
        Predicate::Not(Box::new(Predicate::Or(Box::new(a.clone()), Box::new(b.clone())))),
        Predicate::Not(Box::new(Predicate::And(Box::new(a.clone()), Box::new(b.clone())))),
    ] {
        agrees(&RAExpr::Select(r("x", 2), p), &d);
    }
}

#[test]
fn product_has_all_pairs() {
    let d = db(&[
        ("a", 1, vec![vec![n(1.0)], vec![n(2.0)]]),
        ("b", 1, vec![vec![t("x")], vec![t("y")], vec![t("z")]]),
    ]);
    let rows = agrees(&RAExpr::Product(r("a", 1), r("b", 1)), &d);
    assert_eq!(rows.len(), 6);
}

#[test]
fn set_operations() {
    let d = db(&[
        ("a", 1, vec![vec![n(1.0)], vec![n(2.0)], vec![Datum::Null]]),
        ("b", 1, vec![vec![n(2.0)], vec![n(3.0)], vec![Datum::Null]]),
    ]);
    assert_eq!(agrees(&RAExpr::UnionSet(r("a", 1), r("b", 1)), &d).len(), 4);
    assert_eq!(agrees(&RAExpr::DiffSet(r("a", 1), r("b", 1)), &d), vec![vec![n(1.0)]]);
    assert_eq!(agrees(&RAExpr::IntersectSet(r("a", 1), r("b", 1)), &d).len(), 2);
}

#[test]
fn group_aggregates() {
    let d = db(&[(
        "g",
        3,
        vec![
            vec![t("g"), n(3.0), t("x")],
            vec![t("g"), n(1.0), t("x")],
            vec![t("g"), Datum::Null, t("y")],
            vec![t("h"), n(-2.0), Datum::Null],
            vec![t("h"), n(-2.5), Datum::Null],
            vec![Datum::Null, n(7.0), t("z")],
        ],
    )]);
    let aggs = vec![
        Aggregate { op: AggOp::Min, cols: vec![2] },
        Aggregate { op: AggOp::Max, cols: vec![2] },
        Aggregate { op: AggOp::Count, cols: vec![2] },
        Aggregate { op: AggOp::Count, cols: vec![] },
        Aggregate { op: AggOp::Sum, cols: vec![2] },
        Aggregate { op: AggOp::Avg, cols: vec![2] },
        Aggregate { op: AggOp::CountDistinct, cols: vec![3] },
    ];
    let rows = agrees(&RAExpr::GroupAgg(r("g", 3), vec![1], aggs.clone()), &d);
    assert_eq!(
        rows[0],
        vec![t("g"), n(1.0), n(3.0), n(2.0), n(3.0), n(4.0), n(2.0), n(2.0)]
    );
    agrees(&RAExpr::GroupAgg(r("g", 3), vec![], aggs.clone()), &d);
    agrees(&RAExpr::GroupAgg(r("g", 3), vec![1, 3], aggs), &d);
}

#[test]
fn count_distinct_example() {
    let d = db(&[(
        "g",
        3,
        vec![
            vec![t("g"), t("x"), n(1.0)],
            vec![t("g"), t("x"), n(2.0)],
            vec![t("g"), t("y"), n(3.0)],
        ],
    )]);
    let aggs = vec![Aggregate { op: AggOp::CountDistinct, cols: vec![2] }];
    assert_eq!(
        agrees(&RAExpr::GroupAgg(r("g", 3), vec![1], aggs), &d),
        vec![vec![t("g"), n(2.0)]]
    );
}

#[test]
fn empty_group_input() {
    let d = db(&[("g", 2, vec![])]);
    let aggs = vec![Aggregate { op: AggOp::Count, cols: vec![] }];
    assert!(agrees(&RAExpr::GroupAgg(r("g", 2), vec![], aggs), &d).is_empty());
}

#[test]
fn semijoin_keeps_matches() {
    let d = db(&[
        ("a", 2, vec![vec![n(1.0), t("p")], vec![n(2.0), t("q")], vec![Datum::Null, t("r")]]),
        ("b", 1, vec![vec![n(2.0)], vec![Datum::Null]]),
    ]);
    assert_eq!(
        agrees(&RAExpr::Semijoin(r("a", 2), r("b", 1), 1, 1), &d),
        vec![vec![n(2.0), t("q")]]
    );
}

#[test]
fn join_multiplicities() {
    let d = db(&[
        (
            "a",
            2,
            vec![vec![n(1.0), t("p")], vec![n(1.0), t("q")], vec![n(2.0), t("r")], vec![n(3.0), t("s")]],
        ),
        (
            "b",
            2,
            vec![vec![t("u"), n(1.0)], vec![t("v"), n(1.0)], vec![t("w"), n(3.0)], vec![t("x"), n(4.0)]],
        ),
    ]);
    let rows = agrees(&RAExpr::EqJoin(r("a", 2), r("b", 2), 1, 2), &d);
    assert_eq!(rows.len(), 5);
}

#[test]
fn join_edge_cases() {
    let d = db(&[
        ("a", 1, vec![vec![n(1.0)], vec![n(2.0)]]),
        ("b", 1, vec![vec![n(3.0)]]),
        ("c", 1, vec![vec![n(2.0)]]),
        ("e", 1, vec![]),
    ]);
    assert!(agrees(&RAExpr::EqJoin(r("a", 1), r("b", 1), 1, 1), &d).is_empty());
    assert_eq!(agrees(&RAExpr::EqJoin(r("a", 1), r("c", 1), 1, 1), &d), vec![vec![n(2.0)]]);
    assert!(agrees(&RAExpr::EqJoin(r("a", 1), r("e", 1), 1, 1), &d).is_empty());
}

#[test]
fn extend_and_error_trap() {
    let d = db(&[("x", 2, vec![vec![n(6.0), n(3.0)], vec![n(1.0), n(0.0)], vec![n(2.0), Datum::Null]])]);
    let e = RAExpr::Extend(
        r("x", 2),
        vec![
            ScalarExpr::Arith(crate::ra::ArithOp::Div, Box::new(ScalarExpr::Column(1)), Box::new(ScalarExpr::Column(2))),
            ScalarExpr::Neg(Box::new(ScalarExpr::Literal(n(-1.0)))),
        ],
    );
    agrees(&e, &d);
    agrees(&RAExpr::ErrorTrap(Box::new(e)), &d);
}

#[test]
fn standardize_moves_rows_up() {
    let d = db(&[("x", 1, vec![vec![n(1.0)], vec![n(5.0)], vec![n(2.0)], vec![n(6.0)]])]);
    let p = Predicate::Compare(CmpOp::Gt, ScalarExpr::Column(1), ScalarExpr::Literal(n(4.0)));
    let plan = emit_plan(&RAExpr::Select(r("x", 1), p), &[], 6).unwrap();
    let mut wb = plan.to_workbook().unwrap();
    plan.load(&mut wb, &d).unwrap();
    let state = crate::eval::evaluate_workbook(&wb).unwrap();
    let col = plan.output_cols[0];
    let values: Vec<bool> = (1..=6).map(|row| state.value(Coord::new(row, col)).is_na()).collect();
    assert_eq!(values, [false, false, true, true, true, true]);
}

#[test]
fn formulas_are_uniform_below_row_one() {
    let e = RAExpr::GroupAgg(
        Box::new(RAExpr::EqJoin(r("a", 2), r("b", 2), 1, 1)),
        vec![2],
        vec![Aggregate { op: AggOp::Sum, cols: vec![3] }],
    );
    let plan = emit_plan(&e, &[], 8).unwrap();
    let wb = plan.to_workbook().unwrap();
    for b in &plan.op_blocks {
        for j in 0..b.width() {
            let col = b.start_col + j;
            let second = wb.get(Coord::new(2, col)).clone();
            for row in 3..=8 {
                assert_eq!(wb.get(Coord::new(row, col)).clone(), second, "column {col}");
            }
        }
    }
}

#[test]
fn layout_error_when_too_wide() {
    let e = RAExpr::EqJoin(r("a", 2), r("b", 2), 1, 1);
    assert!(matches!(
        emit_plan_with(&e, &[], 8, 10),
        Err(PlanError::Layout { max: 10, .. })
    ));
}

#[test]
fn min_over_text_is_rejected() {
    let schemas = parse_ddl("CREATE TABLE g (k INT, v TEXT)").unwrap();
    let e = RAExpr::GroupAgg(r("g", 2), vec![1], vec![Aggregate { op: AggOp::Min, cols: vec![2] }]);
    assert!(matches!(emit_plan(&e, &schemas, 4), Err(PlanError::NonNumeric { .. })));
}

#[test]
fn capacity_error() {
    let d = db(&[("x", 1, vec![vec![n(1.0)], vec![n(2.0)], vec![n(3.0)]])]);
    let plan = emit_plan(&RAExpr::reference("x", 1), &[], 2).unwrap();
    assert!(matches!(run_plan(&plan, &d), Err(RunError::Plan(PlanError::Capacity { .. }))));
}

#[test]
fn required_height_covers_union() {
    let d = db(&[("a", 1, vec![vec![n(1.0)], vec![n(2.0)]]), ("b", 1, vec![vec![n(2.0)], vec![n(3.0)]])]);
    let e = RAExpr::UnionSet(r("a", 1), r("b", 1));
    assert_eq!(required_height(&e, &d), Ok(4));
}
