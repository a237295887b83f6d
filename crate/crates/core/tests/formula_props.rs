use std::sync::Arc;

use proptest::prelude::*;

use sqlsheet_core::formula::{
    column_letters, fill_down, parse_formula, render, render_with, BinaryOp, Expr, Function, Notation, RenderOptions,
    UnaryOp,
};
use sqlsheet_core::grid::{resolve_ref, CellRef, CellValue, Coord, ErrorKind, RangeRef, RefComponent};

const SPAN: u32 = 40;

fn anchor() -> impl Strategy<Value = Coord> {
    (1..=SPAN, 1..=SPAN).prop_map(|(r, c)| Coord::new(r, c))
}

/// A component addressing `target` from `anchor`, absolute or relative.
fn component(anchor: u32) -> impl Strategy<Value = RefComponent> {
    (1..=SPAN, any::<bool>()).prop_map(move |(target, absolute)| {
        if absolute {
            RefComponent::Absolute(target)
        } else {
            RefComponent::relative(target as i32 - anchor as i32)
        }
    })
}

fn cell_ref(at: Coord) -> impl Strategy<Value = CellRef> {
    (component(at.row), component(at.col)).prop_map(|(row, col)| CellRef { row, col })
}

fn range(at: Coord) -> impl Strategy<Value = RangeRef> {
    prop_oneof![
        (cell_ref(at), cell_ref(at)).prop_map(|(start, end)| RangeRef::Area { start, end }),
        component(at.col).prop_map(RangeRef::Column),
        component(at.row).prop_map(RangeRef::Row),
    ]
}

fn literal() -> impl Strategy<Value = CellValue> {
    prop_oneof![
        (0u32..100_000).prop_map(|n| CellValue::Number(f64::from(n) / 8.0)),
        Just(CellValue::Number(1e300)),
        "[a-z \"<>=&]{0,6}".prop_map(CellValue::Text),
        any::<bool>().prop_map(CellValue::Boolean),
        prop_oneof![
            Just(ErrorKind::Na),
            Just(ErrorKind::Value),
            Just(ErrorKind::Div0),
            Just(ErrorKind::Ref)
        ]
        .prop_map(CellValue::Error),
    ]
}

const OPS: [BinaryOp; 12] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Pow,
    BinaryOp::Concat,
    BinaryOp::Eq,
    BinaryOp::Ne,
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
];

fn expr(at: Coord) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Literal),
        cell_ref(at).prop_map(Expr::Ref),
        range(at).prop_map(Expr::Range),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
            (0..OPS.len(), inner.clone(), inner.clone()).prop_map(|(i, l, r)| Expr::binary(OPS[i], l, r)),
            (0..Function::ALL.len(), prop::collection::vec(inner, 0..5)).prop_filter_map(
                "argument count",
                |(i, mut args)| {
                    let f = Function::ALL[i];
                    while !f.accepts(args.len()) {
                        if args.len() > f.arity().0 {
                            args.pop();
                        } else {
                            args.push(Expr::num(1.0));
                        }
                        if args.len() > 8 {
                            return None;
                        }
                    }
                    Some(Expr::call(f, args))
                }
            ),
        ]
    })
}

fn anchored_expr() -> impl Strategy<Value = (Coord, Expr)> {
    anchor().prop_flat_map(|at| (Just(at), expr(at)))
}

fn a1_address(r: CellRef, at: Coord) -> String {
    let c = resolve_ref(r, at).unwrap();
    let d = |x: RefComponent| if matches!(x, RefComponent::Absolute(_)) { "$" } else { "" };
    format!("{}{}{}{}", d(r.col), column_letters(c.col), d(r.row), c.row)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn r1c1_round_trip((at, e) in anchored_expr()) {
        let text = render(&e, Notation::R1C1, at).unwrap();
        prop_assert_eq!(parse_formula(&text, Notation::R1C1, at).unwrap(), e, "{}", text);
    }

    #[test]
    fn a1_round_trip((at, e) in anchored_expr()) {
        let dollar = RenderOptions { dollar_absolute: true };
        let text = render_with(&e, Notation::A1, at, dollar).unwrap();
        prop_assert_eq!(&parse_formula(&text, Notation::A1, at).unwrap(), &e, "{}", text);
        // without $ the same cells are addressed
        let plain = render(&e, Notation::A1, at).unwrap();
        prop_assert_eq!(parse_formula(&plain, Notation::A1, at).unwrap().resolved_at(at), e.resolved_at(at));
    }

    #[test]
    fn rendering_is_stable((at, e) in anchored_expr()) {
        for n in [Notation::R1C1, Notation::A1] {
            let once = render(&e, n, at).unwrap();
            let twice = render(&parse_formula(&once, n, at).unwrap(), n, at).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn r1c1_refs_resolve_like_resolve_ref((at, r) in anchor().prop_flat_map(|at| (Just(at), cell_ref(at))), other in anchor()) {
        let text = render(&Expr::Ref(r), Notation::R1C1, at).unwrap();
        let back = parse_formula(&text, Notation::R1C1, other).unwrap();
        let Expr::Ref(back) = back else { panic!("{text}") };
        prop_assert_eq!(resolve_ref(back, other), resolve_ref(r, other));
    }

    #[test]
    fn fill_down_copies_r1c1_text(
        (at, e) in anchored_expr(),
        to in 2u32..30,
    ) {
        let template = vec![(at.col, Arc::new(e.clone()))];
        let writes = fill_down(&template, 2, to, 30).unwrap();
        prop_assert_eq!(writes.len() as u32, to - 1);
        let text = render(&e, Notation::R1C1, at).unwrap();
        for (c, f) in &writes {
            prop_assert_eq!(&render(f, Notation::R1C1, *c).unwrap(), &text);
        }
    }

    #[test]
    fn fill_down_shifts_relative_a1_parts((col, r) in (1u32..=SPAN).prop_flat_map(|c| (Just(c), cell_ref(Coord::new(2, c))))) {
        // a reference that stays on the sheet for every filled row
        let r = CellRef {
            row: match r.row {
                RefComponent::Relative(d) => RefComponent::relative(d.clamp(-1, 10)),
                x => x,
            },
            col: r.col,
        };
        let template = vec![(col, Arc::new(Expr::Ref(r)))];
        let dollar = RenderOptions { dollar_absolute: true };
        for (c, f) in fill_down(&template, 2, 12, 30).unwrap() {
            let text = render_with(&f, Notation::A1, c, dollar).unwrap();
            let want = format!("={}", a1_address(r, c));
            prop_assert_eq!(text, want);
        }
    }
}

#[test]
fn fill_down_edge_cases() {
    assert!(fill_down(&[], 2, 10, 10).unwrap().is_empty());
    let t = vec![(5, Arc::new(parse_formula("=RC1+1", Notation::R1C1, Coord::new(2, 5)).unwrap()))];
    let w = fill_down(&t, 2, 4, 10).unwrap();
    assert_eq!(w.len(), 3);
    assert!(fill_down(&t, 2, 11, 10).is_err());
}
