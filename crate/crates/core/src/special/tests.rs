use super::*;
use crate::eval::evaluate_workbook;
use crate::ra::Datum;
use std::collections::{HashMap, VecDeque};

fn v(s: &str) -> Datum {
    Datum::text(s)
}

fn graph(edges: &[(&str, &str)], start: &str) -> EdgeList {
    EdgeList::new(edges.iter().map(|(a, b)| (v(a), v(b))).collect(), v(start))
}

fn sort_check(values: &[f64], layout: SortLayout) {
    let mut sheet = gen_merge_sort(values.len(), layout, values.len().max(1).next_power_of_two() as u32 + 1).unwrap();
    sheet.load(values).unwrap();
    let state = evaluate_workbook(&sheet.workbook).unwrap();
    let mut want = values.to_vec();
    want.sort_by(f64::total_cmp);
    let got: Vec<f64> = sheet.read_sorted(&state).iter().map(|c| c.as_number().unwrap()).collect();
    assert_eq!(got, want);
}

#[test]
fn merge_sort_eight() {
    let values = [5.0, 3.0, 8.0, 1.0, 9.0, 2.0, 7.0, 4.0];
    let sheet = gen_merge_sort(8, SortLayout::Expanded, 9).unwrap();
    assert_eq!(sheet.levels, 3);
    assert_eq!(sheet.generated_cols(), 36);
    assert_eq!(sheet.output_col, 37);
    sort_check(&values, SortLayout::Expanded);
    sort_check(&values, SortLayout::Condensed);
}

#[test]
fn merge_sort_single_item() {
    let mut sheet = gen_merge_sort(1, SortLayout::Expanded, 4).unwrap();
    assert_eq!(sheet.levels, 0);
    assert_eq!(sheet.output_col, 1);
    sheet.load(&[42.0]).unwrap();
    let state = evaluate_workbook(&sheet.workbook).unwrap();
    assert_eq!(sheet.read_sorted(&state), vec![crate::grid::CellValue::Number(42.0)]);
}

#[test]
fn merge_sort_reverse_and_padding() {
    let rev: Vec<f64> = (0..16).rev().map(f64::from).collect();
    sort_check(&rev, SortLayout::Expanded);
    sort_check(&rev, SortLayout::Condensed);
    sort_check(&[3.0, -1.0, 3.0, 0.5, 2.0], SortLayout::Expanded);
    sort_check(&[3.0, -1.0, 3.0, 0.5, 2.0], SortLayout::Condensed);
}

#[test]
fn merge_sort_bounds() {
    assert_eq!(
        gen_merge_sort(5, SortLayout::Expanded, 8).unwrap_err(),
        SpecialError::Bounds { needed: 9, height: 8 }
    );
}

/// Queue-based BFS distances.
fn bfs_oracle(g: &EdgeList) -> HashMap<Datum, usize> {
    let mut dist = HashMap::new();
    dist.insert(g.start.clone(), 0);
    let mut queue = VecDeque::from([g.start.clone()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        for (a, b) in &g.edges {
            if *a == x && !dist.contains_key(b) {
                dist.insert(b.clone(), d + 1);
                queue.push_back(b.clone());
            }
        }
    }
    dist
}

fn bfs_check(g: &EdgeList) {
    let sheet = gen_bfs(g, None).unwrap();
    let state = sheet.evaluate().unwrap();
    let want = bfs_oracle(g);
    for (vertex, level) in sheet.levels(&state) {
        match want.get(&vertex) {
            Some(&d) => assert_eq!(level, d as f64, "{vertex}"),
            None => assert_eq!(level, INFINITE_LEVEL, "{vertex}"),
        }
    }
    let order = sheet.order(&state);
    assert_eq!(order.len(), want.len());
    assert!(order.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn bfs_path_and_diamond() {
    let g = graph(&[("a", "b"), ("b", "c")], "a");
    bfs_check(&g);
    let sheet = gen_bfs(&g, None).unwrap();
    let state = sheet.evaluate().unwrap();
    let order: Vec<Datum> = sheet.order(&state).into_iter().map(|p| p.0).collect();
    assert_eq!(order, vec![v("a"), v("b"), v("c")]);

    let g = graph(&[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")], "a");
    bfs_check(&g);
    bfs_check(&graph(&[("x", "a"), ("x", "b"), ("b", "c")], "b"));
    bfs_check(&graph(&[], "s"));
}

#[test]
fn bfs_cycle_is_circular_reference() {
    let sheet = gen_bfs(&graph(&[("s", "a"), ("a", "b"), ("b", "a")], "s"), None).unwrap();
    assert!(matches!(
        sheet.evaluate(),
        Err(SpecialError::Eval(crate::eval::EvalError::CircularReference { .. }))
    ));
    // a cycle through the start vertex does not reach the recurrence
    bfs_check(&graph(&[("s", "a"), ("a", "s")], "s"));
}

/// Recursive DFS visiting children in edge order.
fn dfs_oracle(g: &EdgeList) -> Vec<Datum> {
    fn visit(x: &Datum, g: &[(Datum, Datum)], out: &mut Vec<Datum>) {
        out.push(x.clone());
        for (a, b) in g {
            if a == x && !out.contains(b) {
                visit(b, g, out);
            }
        }
    }
    let mut out = Vec::new();
    visit(&g.start, &g.distinct_edges(), &mut out);
    out
}

fn dfs_check(g: &EdgeList) {
    let sheet = gen_dfs(g, None).unwrap();
    let state = sheet.evaluate().unwrap();
    assert_eq!(sheet.order(&state), dfs_oracle(g), "{g:?}");
}

#[test]
fn dfs_examples() {
    let g = graph(&[("a", "b"), ("a", "c"), ("b", "d")], "a");
    assert_eq!(dfs_oracle(&g), vec![v("a"), v("b"), v("d"), v("c")]);
    dfs_check(&g);
    dfs_check(&graph(&[("a", "b")], "a"));
    dfs_check(&graph(&[("a", "b"), ("b", "a")], "a"));
    dfs_check(&graph(&[("b", "c"), ("a", "c"), ("c", "a"), ("a", "b")], "a"));
    dfs_check(&graph(&[], "a"));
}

#[test]
fn numeric_vertices() {
    let g = EdgeList::new(
        vec![(Datum::Number(0.0), Datum::Number(1.0)), (Datum::Number(1.0), Datum::Number(0.0))],
        Datum::Number(1.0),
    );
    dfs_check(&g);
    bfs_check(&EdgeList::new(
        vec![(Datum::Number(0.0), Datum::Number(1.0)), (Datum::Number(1.0), Datum::Number(2.0))],
        Datum::Number(0.0),
    ));
}
