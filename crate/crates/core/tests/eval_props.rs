use proptest::prelude::*;

use sqlsheet_core::eval::{evaluate_formula, evaluate_static, evaluate_workbook, EvalError};
use sqlsheet_core::formula::{parse_formula, BinaryOp, Expr, Function, Notation};
use sqlsheet_core::grid::{Cell, CellRef, CellValue, Coord, ErrorKind, RangeRef, RefComponent, Workbook};

const ROWS: u32 = 6;
const COLS: u32 = 5;
const HEIGHT: u32 = 8;

fn component(anchor: u32, span: u32) -> impl Strategy<Value = RefComponent> {
    (1..=span, any::<bool>()).prop_map(move |(t, abs)| {
        if abs {
            RefComponent::Absolute(t)
        } else {
            RefComponent::relative(t as i32 - anchor as i32)
        }
    })
}

fn cell_ref(at: Coord, cols: u32) -> impl Strategy<Value = CellRef> {
    (component(at.row, ROWS), component(at.col, cols)).prop_map(|(row, col)| CellRef { row, col })
}

fn value() -> impl Strategy<Value = CellValue> {
    prop_oneof![
        4 => (-3i32..6).prop_map(|n| CellValue::Number(f64::from(n))),
        2 => prop::sample::select(vec!["a", "b", "A", "", "<2", "=a"]).prop_map(CellValue::text),
        1 => any::<bool>().prop_map(CellValue::Boolean),
        1 => prop::sample::select(vec![ErrorKind::Na, ErrorKind::Value, ErrorKind::Div0]).prop_map(CellValue::Error),
    ]
}

const FUNCS: [Function; 21] = [
    Function::If,
    Function::And,
    Function::Or,
    Function::Not,
    Function::Na,
    Function::IsNa,
    Function::IsErr,
    Function::IsError,
    Function::IfError,
    Function::Match,
    Function::Index,
    Function::CountIf,
    Function::CountIfs,
    Function::SumIfs,
    Function::Sum,
    Function::Min,
    Function::Max,
    Function::CountA,
    Function::Mod,
    Function::Quotient,
    Function::Power,
];

const OPS: [BinaryOp; 8] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Concat,
    BinaryOp::Eq,
    BinaryOp::Lt,
    BinaryOp::Ge,
];

/// Formulas at `at` referencing columns 1..=cols.
fn expr(at: Coord, cols: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        2 => value().prop_map(Expr::Literal),
        4 => cell_ref(at, cols).prop_map(Expr::Ref),
        1 => (cell_ref(at, cols), cell_ref(at, cols)).prop_map(|(start, end)| Expr::Range(RangeRef::Area { start, end })),
        1 => component(at.col, cols).prop_map(|c| Expr::Range(RangeRef::Column(c))),
    ];
    leaf.prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            (0..OPS.len(), inner.clone(), inner.clone()).prop_map(|(i, l, r)| Expr::binary(OPS[i], l, r)),
            (0..FUNCS.len(), prop::collection::vec(inner, 0..5)).prop_filter_map("argument count", |(i, mut args)| {
                let f = FUNCS[i];
                while !f.accepts(args.len()) {
                    if args.len() > f.arity().0 {
                        args.pop();
                    } else {
                        args.push(Expr::num(1.0));
                    }
                }
                Some(Expr::call(f, args))
            }),
        ]
    })
}

/// A grid of literals and formulas over rows 1..ROWS and columns 1..COLS.
/// With `acyclic` a formula only reads columns to its left.
fn grid(acyclic: bool) -> impl Strategy<Value = Workbook> {
    let cells: Vec<_> = (1..=ROWS)
        .flat_map(|r| (1..=COLS).map(move |c| Coord::new(r, c)))
        .map(move |at| {
            let cols = if acyclic { at.col - 1 } else { COLS };
            let formulas = if cols == 0 { 0 } else { 3 };
            prop_oneof![
                3 => value().prop_map(Cell::Literal),
                1 => Just(Cell::Literal(CellValue::Blank)),
                formulas => expr(at, cols.max(1)).prop_map(Cell::formula),
            ]
            .prop_map(move |cell| (at, cell))
        })
        .collect();
    cells.prop_map(|cells| {
        let mut wb = Workbook::new(HEIGHT).unwrap();
        for (at, cell) in cells {
            if cell != Cell::Literal(CellValue::Blank) {
                wb.set(at, cell).unwrap();
            }
        }
        wb
    })
}

fn is_cycle<T>(r: &Result<T, EvalError>) -> bool {
    matches!(r, Err(EvalError::CircularReference { .. }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn demand_matches_static_order(wb in grid(false)) {
        let demand = evaluate_workbook(&wb);
        let fixed = evaluate_static(&wb);
        match (&demand, &fixed) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            // lazy IF and IFERROR may avoid a static cycle
            (_, Err(e)) => prop_assert!(is_cycle(&fixed), "{e}"),
            (Err(e), Ok(_)) => prop_assert!(false, "demand failed alone: {e}"),
        }
    }

    #[test]
    fn acyclic_grids_agree(wb in grid(true)) {
        let fixed = evaluate_static(&wb);
        prop_assert!(fixed.is_ok(), "{:?}", fixed.err());
        prop_assert_eq!(evaluate_workbook(&wb).unwrap(), fixed.unwrap());
    }

    #[test]
    fn evaluation_is_deterministic(wb in grid(false)) {
        prop_assert_eq!(evaluate_workbook(&wb), evaluate_workbook(&wb));
    }

    #[test]
    fn error_classes_partition_values(v in value()) {
        let mut wb = Workbook::new(4).unwrap();
        wb.set(Coord::new(1, 1), Cell::Literal(v.clone())).unwrap();
        let at = Coord::new(2, 2);
        let ask = |f: &str| {
            let e = parse_formula(&format!("={f}(A1)"), Notation::A1, at).unwrap();
            evaluate_formula(&wb, &e, at).unwrap() == CellValue::Boolean(true)
        };
        let (na, err, any) = (ask("ISNA"), ask("ISERR"), ask("ISERROR"));
        prop_assert!(!(na && err));
        prop_assert_eq!(any, na || err);
        prop_assert_eq!(na, v == CellValue::Error(ErrorKind::Na));
        prop_assert_eq!(any, matches!(v, CellValue::Error(_)));
    }

    #[test]
    fn error_kind_equality_is_an_equivalence(a in 0usize..6, b in 0usize..6, c in 0usize..6) {
        let k = [ErrorKind::Na, ErrorKind::Value, ErrorKind::Div0, ErrorKind::Ref, ErrorKind::Name, ErrorKind::Num];
        let (a, b, c) = (k[a], k[b], k[c]);
        prop_assert!(a == a);
        prop_assert_eq!(a == b, b == a);
        if a == b && b == c {
            prop_assert!(a == c);
        }
    }

    #[test]
    fn workbook_write_then_read(writes in prop::collection::vec((1u32..=50, 1u32..=30, value()), 0..40)) {
        let mut wb = Workbook::new(50).unwrap();
        let mut last = std::collections::HashMap::new();
        for (r, c, v) in writes {
            let at = Coord::new(r, c);
            wb.set(at, Cell::Literal(v.clone())).unwrap();
            prop_assert_eq!(wb.get(at), &Cell::Literal(v.clone()));
            last.insert(at, v);
        }
        for (at, v) in last {
            prop_assert_eq!(wb.get(at), &Cell::Literal(v));
        }
    }
}

#[test]
fn out_of_bounds_writes_fail() {
    let mut wb = Workbook::new(4).unwrap();
    assert!(wb.set(Coord::new(5, 1), Cell::Literal(CellValue::Number(1.0))).is_err());
    assert!(wb.set(Coord::new(0, 1), Cell::Literal(CellValue::Number(1.0))).is_err());
}
