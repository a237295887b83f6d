mod common;

use common::{database, expr2, predicate};
use proptest::prelude::*;

use sqlsheet_core::ra::{oracle_eval, Database, Datum, RAExpr, Relation, Tuple};
use sqlsheet_core::sql::{parse_ddl, parse_sql, print_query};
use sqlsheet_core::verify::nth_case;

fn eval(e: &RAExpr, db: &Database) -> Relation {
    oracle_eval(e, db).unwrap_or_else(|err| panic!("{err}\n{e:?}"))
}

fn subset(a: &Relation, b: &Relation) -> bool {
    a.rows.iter().all(|t| b.contains(t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn join_decomposes_into_semijoins(l in expr2(), r in expr2(), i in 1..=2usize, j in 1..=2usize, db in database()) {
        let b = |e: &RAExpr| Box::new(e.clone());
        let join = RAExpr::EqJoin(b(&l), b(&r), i, j);
        let reduced = RAExpr::EqJoin(
            Box::new(RAExpr::Semijoin(b(&l), b(&r), i, j)),
            Box::new(RAExpr::Semijoin(b(&r), b(&l), j, i)),
            i,
            j,
        );
        prop_assert!(eval(&join, &db).same_set(&eval(&reduced, &db)));
    }

    #[test]
    fn select_distributes_over_union(l in expr2(), r in expr2(), p in predicate(), db in database()) {
        let b = |e: &RAExpr| Box::new(e.clone());
        let outer = RAExpr::Select(Box::new(RAExpr::UnionSet(b(&l), b(&r))), p.clone());
        let inner = RAExpr::UnionSet(
            Box::new(RAExpr::Select(b(&l), p.clone())),
            Box::new(RAExpr::Select(b(&r), p)),
        );
        prop_assert!(eval(&outer, &db).same_set(&eval(&inner, &db)));
    }

    #[test]
    fn dedup_is_idempotent(e in expr2(), db in database()) {
        let once = eval(&RAExpr::DeDup(Box::new(e.clone())), &db);
        let twice = eval(&RAExpr::DeDup(Box::new(RAExpr::DeDup(Box::new(e.clone())))), &db);
        prop_assert_eq!(&once.rows, &twice.rows);
        let mut rows = once.rows.clone();
        rows.sort();
        rows.dedup();
        prop_assert_eq!(rows.len(), once.len());
        prop_assert!(once.same_set(&eval(&e, &db)));
    }

    #[test]
    fn semijoin_and_selection_shrink(e in expr2(), s in expr2(), p in predicate(), db in database()) {
        let base = eval(&e, &db);
        let b = |x: &RAExpr| Box::new(x.clone());
        prop_assert!(subset(&eval(&RAExpr::Semijoin(b(&e), b(&s), 1, 2), &db), &base));
        prop_assert!(subset(&eval(&RAExpr::Select(b(&e), p), &db), &base));
    }

    #[test]
    fn set_operators_agree_with_membership(l in expr2(), r in expr2(), db in database()) {
        let b = |x: &RAExpr| Box::new(x.clone());
        let (lv, rv) = (eval(&l, &db), eval(&r, &db));
        let union = eval(&RAExpr::UnionSet(b(&l), b(&r)), &db);
        let diff = eval(&RAExpr::DiffSet(b(&l), b(&r)), &db);
        let inter = eval(&RAExpr::IntersectSet(b(&l), b(&r)), &db);
        for t in lv.rows.iter().chain(&rv.rows) {
            prop_assert!(union.contains(t));
            prop_assert_eq!(diff.contains(t), lv.contains(t) && !rv.contains(t));
            prop_assert_eq!(inter.contains(t), lv.contains(t) && rv.contains(t));
        }
        prop_assert!(subset(&union, &Relation::from_rows(2, lv.rows.iter().chain(&rv.rows).cloned())));
    }

    #[test]
    fn printed_sql_parses_to_the_same_query(seed in 0u64..1000, index in 0usize..64) {
        let case = nth_case(seed, index, 64);
        let schemas = case.schemas();
        let q = parse_sql(&case.sql, &schemas).unwrap();
        let printed = print_query(&q);
        let back = parse_sql(&printed, &schemas).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        prop_assert_eq!(&back, &q, "{}", printed);
        prop_assert_eq!(print_query(&back), printed);
    }
}

// A nested-loop interpreter for select-project-join queries over
// t1(a INT, b TEXT) and t2(c INT, d TEXT).

#[derive(Debug, Clone)]
enum Cond {
    CmpCols(&'static str, usize, usize),
    CmpLit(&'static str, usize, Datum),
    IsNull(usize, bool),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

const NAMES: [&str; 4] = ["t1.a", "t1.b", "t2.c", "t2.d"];

fn numeric(col: usize) -> bool {
    col.is_multiple_of(2)
}

fn sql_lit(d: &Datum) -> String {
    match d {
        Datum::Number(x) => format!("{x}"),
        Datum::Text(s) => format!("'{s}'"),
        _ => unreachable!(),
    }
}

impl Cond {
    fn sql(&self) -> String {
        match self {
            Cond::CmpCols(op, a, b) => format!("{} {op} {}", NAMES[*a], NAMES[*b]),
            Cond::CmpLit(op, a, d) => format!("{} {op} {}", NAMES[*a], sql_lit(d)),
            Cond::IsNull(a, neg) => format!("{} IS {}NULL", NAMES[*a], if *neg { "NOT " } else { "" }),
            Cond::And(l, r) => format!("({} AND {})", l.sql(), r.sql()),
            Cond::Or(l, r) => format!("({} OR {})", l.sql(), r.sql()),
            Cond::Not(x) => format!("NOT ({})", x.sql()),
        }
    }

    fn eval(&self, row: &[Datum]) -> Option<bool> {
        match self {
            Cond::CmpCols(op, a, b) => compare(op, &row[*a], &row[*b]),
            Cond::CmpLit(op, a, d) => compare(op, &row[*a], d),
            Cond::IsNull(a, neg) => Some(row[*a].is_null() != *neg),
            Cond::And(l, r) => match (l.eval(row), r.eval(row)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Cond::Or(l, r) => match (l.eval(row), r.eval(row)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Cond::Not(x) => x.eval(row).map(|b| !b),
        }
    }
}

fn compare(op: &str, x: &Datum, y: &Datum) -> Option<bool> {
    let ord = match (x, y) {
        (Datum::Number(a), Datum::Number(b)) => a.partial_cmp(b)?,
        (Datum::Text(a), Datum::Text(b)) => a.to_lowercase().cmp(&b.to_lowercase()),
        _ => return None,
    };
    Some(match op {
        "=" => ord.is_eq(),
        "<>" => ord.is_ne(),
        "<" => ord.is_lt(),
        "<=" => ord.is_le(),
        ">" => ord.is_gt(),
        _ => ord.is_ge(),
    })
}

fn typed_datum(num: bool) -> BoxedStrategy<Datum> {
    let value = if num {
        (0..4).prop_map(|n| Datum::Number(f64::from(n))).boxed()
    } else {
        prop::sample::select(vec!["a", "B", "b"]).prop_map(Datum::text).boxed()
    };
    prop_oneof![1 => Just(Datum::Null), 4 => value].boxed()
}

fn cond(cols: usize) -> impl Strategy<Value = Cond> {
    let op = prop::sample::select(vec!["=", "<>", "<", "<=", ">", ">="]);
    let atom = prop_oneof![
        (op.clone(), 0..cols, 0..cols / 2).prop_map(|(op, a, k)| {
            // same type: both even or both odd
            Cond::CmpCols(op, a, (2 * k + a % 2) % 4)
        }),
        (op, 0..cols)
            .prop_flat_map(|(op, a)| typed_datum(numeric(a)).prop_filter("literal", |d| !d.is_null()).prop_map(move |d| Cond::CmpLit(op, a, d))),
        (0..cols, any::<bool>()).prop_map(|(a, n)| Cond::IsNull(a, n)),
    ];
    atom.prop_recursive(2, 6, 2, |c| {
        prop_oneof![
            (c.clone(), c.clone()).prop_map(|(a, b)| Cond::And(Box::new(a), Box::new(b))),
            (c.clone(), c.clone()).prop_map(|(a, b)| Cond::Or(Box::new(a), Box::new(b))),
            c.prop_map(|a| Cond::Not(Box::new(a))),
        ]
    })
}

fn table() -> impl Strategy<Value = Vec<Tuple>> {
    prop::collection::vec((typed_datum(true), typed_datum(false)).prop_map(|(n, t)| vec![n, t]), 0..5)
}

fn spj() -> impl Strategy<Value = (bool, Vec<usize>, Cond)> {
    any::<bool>().prop_flat_map(|join| {
        let cols = if join { 4 } else { 2 };
        (Just(join), prop::collection::vec(0..cols, 1..4), cond(cols))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn translation_matches_nested_loops((join, select, cond) in spj(), t1 in table(), t2 in table()) {
        let schemas = parse_ddl("CREATE TABLE t1 (a INT, b TEXT); CREATE TABLE t2 (c INT, d TEXT);").unwrap();
        let from = if join { "t1, t2" } else { "t1" };
        let list: Vec<&str> = select.iter().map(|&c| NAMES[c]).collect();
        let sql = format!("SELECT {} FROM {from} WHERE {}", list.join(", "), cond.sql());
        let q = parse_sql(&sql, &schemas).unwrap_or_else(|e| panic!("{e}\n{sql}"));
        let e = sqlsheet_core::ra::translate(&q, &schemas).unwrap();
        let db: Database = [("t1", &t1), ("t2", &t2)]
            .into_iter()
            .map(|(n, rows)| (n.to_string(), Relation::from_rows(2, rows.iter().cloned())))
            .collect();
        let got = oracle_eval(&e, &db).unwrap();

        let mut want = Vec::new();
        let right: Vec<Tuple> = if join { t2.clone() } else { vec![vec![]] };
        for a in &t1 {
            for b in &right {
                let row: Tuple = a.iter().chain(b).cloned().collect();
                if cond.eval(&row) == Some(true) {
                    want.push(select.iter().map(|&c| row[c].clone()).collect::<Tuple>());
                }
            }
        }
        let want = Relation::from_rows(select.len(), want);
        prop_assert!(got.same_set(&want), "{}\ngot {:?}\nwant {:?}", sql, got.rows, want.rows);
    }
}
