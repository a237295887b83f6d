use std::sync::Arc;

use crate::codegen::{emit_over, WorksheetPlan};
use crate::eval::{evaluate_workbook, EvalState};
use crate::grid::{Cell, CellValue, Coord, Workbook, DEFAULT_MAX_COLS};
use crate::ra::{CmpOp, Datum, Direction, Predicate, RAExpr, ScalarExpr};

use super::{r1c1, SpecialError};

/// Level of vertices not reachable from the start vertex.
pub const INFINITE_LEVEL: f64 = 1e300;

/// A directed graph as an ordered list of edges, with a start vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<(Datum, Datum)>,
    pub start: Datum,
}

impl EdgeList {
    pub fn new(edges: Vec<(Datum, Datum)>, start: Datum) -> EdgeList {
        EdgeList { edges, start }
    }

    fn check(&self) -> Result<(), SpecialError> {
        let ok = |d: &Datum| matches!(d, Datum::Number(_) | Datum::Text(_));
        if ok(&self.start) && self.edges.iter().all(|(a, b)| ok(a) && ok(b)) {
            Ok(())
        } else {
            Err(SpecialError::BadVertex)
        }
    }

    /// Edges without repeats, in order of first appearance.
    pub fn distinct_edges(&self) -> Vec<(Datum, Datum)> {
        let mut out: Vec<(Datum, Datum)> = Vec::new();
        for e in &self.edges {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
        out
    }

    /// Start vertex first, then the others in order of appearance.
    pub fn vertices(&self) -> Vec<Datum> {
        let mut out = vec![self.start.clone()];
        for (a, b) in &self.edges {
            for v in [a, b] {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}

fn literal(d: &Datum) -> Cell {
    Cell::Literal(d.to_cell().expect("vertex"))
}

fn fill(wb: &mut Workbook, col: u32, rows: std::ops::RangeInclusive<u32>, text: &str) -> Result<(), SpecialError> {
    let expr = Arc::new(r1c1(text, Coord::new(*rows.start(), col)));
    for row in rows {
        wb.set(Coord::new(row, col), Cell::Formula(Arc::clone(&expr)))?;
    }
    Ok(())
}

/// BFS levels. Columns A:B hold the expanded edge list sorted by target,
/// C1 the start vertex, D:F the block start, in-degree and level per row.
#[derive(Debug, Clone)]
pub struct BfsSheet {
    pub workbook: Workbook,
    /// Rows of the expanded edge list.
    pub rows: u32,
    /// Sort, filter and dedup of (vertex, level).
    pub order_plan: WorksheetPlan,
}

impl BfsSheet {
    pub fn evaluate(&self) -> Result<EvalState, SpecialError> {
        Ok(evaluate_workbook(&self.workbook)?)
    }

    /// Level of every vertex, `INFINITE_LEVEL` when unreachable.
    pub fn levels(&self, state: &EvalState) -> Vec<(Datum, f64)> {
        let mut out: Vec<(Datum, f64)> = Vec::new();
        for row in 1..=self.rows {
            let v = Datum::from_cell(state.value(Coord::new(row, 1)));
            let level = state.value(Coord::new(row, 6)).as_number().unwrap_or(f64::NAN);
            if !out.iter().any(|(w, _)| *w == v) {
                out.push((v, level));
            }
        }
        out
    }

    /// Reachable vertices in BFS order, with their levels.
    pub fn order(&self, state: &EvalState) -> Vec<(Datum, f64)> {
        self.order_plan
            .read_rows(state)
            .into_iter()
            .map(|t| {
                let level = match t[1] {
                    Datum::Number(x) => x,
                    _ => f64::NAN,
                };
                (t[0].clone(), level)
            })
            .collect()
    }
}

/// Builds the BFS level sheet. `height` defaults to the expanded edge count.
pub fn gen_bfs(graph: &EdgeList, height: Option<u32>) -> Result<BfsSheet, SpecialError> {
    graph.check()?;
    let edges = graph.distinct_edges();
    let mut expanded: Vec<(Datum, Option<Datum>)> = edges.iter().map(|(a, b)| (a.clone(), Some(b.clone()))).collect();
    for v in graph.vertices() {
        if !edges.iter().any(|(a, _)| *a == v) {
            expanded.push((v, None));
        }
    }
    // incoming edges of a vertex form one block; sinks go last
    expanded.sort_by(|x, y| match (&x.1, &y.1) {
        (Some(a), Some(b)) => a.cmp(b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let m = expanded.len() as u32;
    let height = height.unwrap_or(m);
    if height < m {
        return Err(SpecialError::Bounds { needed: m, height });
    }

    let mut wb = Workbook::new(height)?;
    let na = Arc::new(r1c1("=NA()", Coord::new(1, 1)));
    for row in 1..=height {
        let (a, b) = match expanded.get(row as usize - 1) {
            Some((a, Some(b))) => (literal(a), literal(b)),
            Some((a, None)) => (literal(a), Cell::Formula(Arc::clone(&na))),
            None => (Cell::Formula(Arc::clone(&na)), Cell::Formula(Arc::clone(&na))),
        };
        wb.set(Coord::new(row, 1), a)?;
        wb.set(Coord::new(row, 2), b)?;
    }
    wb.set(Coord::new(1, 3), literal(&graph.start))?;
    fill(&mut wb, 4, 1..=height, "=MATCH(RC1,C2,0)")?;
    fill(&mut wb, 5, 1..=height, "=COUNTIF(C2,RC1)")?;
    fill(
        &mut wb,
        6,
        1..=height,
        "=IF(RC1=R1C3,0,IF(ISERROR(RC4),1E300,1+MIN(OFFSET(R1C6,RC4-1,0,RC5))))",
    )?;
    for (col, text) in [
        (1, "Edge source; the expanded edge list sorted by target"),
        (2, "Edge target, #N/A for vertices without outgoing edges"),
        (3, "Start vertex"),
        (4, "First row of the edges entering the source"),
        (5, "Number of edges entering the source"),
        (6, "BFS level of the source"),
    ] {
        wb.set_comment(Coord::new(1, col), text)?;
    }

    let finite = Predicate::Compare(
        CmpOp::Lt,
        ScalarExpr::Column(2),
        ScalarExpr::Literal(Datum::Number(INFINITE_LEVEL)),
    );
    let e = RAExpr::DeDup(Box::new(RAExpr::Sort(
        Box::new(RAExpr::Select(Box::new(RAExpr::reference("bfs", 2)), finite)),
        2,
        Direction::Asc,
    )));
    let order_plan = emit_over(&e, &[("bfs", vec![1, 6])], 7, height, DEFAULT_MAX_COLS)?;
    order_plan.write_ops(&mut wb)?;
    Ok(BfsSheet {
        workbook: wb,
        rows: m,
        order_plan,
    })
}

/// Iterative DFS, one step per row. Columns A:B hold the edges sorted by
/// source, C1 the start vertex, D:M the traversal state.
#[derive(Debug, Clone)]
pub struct DfsSheet {
    pub workbook: Workbook,
    /// Rows of steps, twice the number of edges.
    pub steps: u32,
    /// Distinct non-null vertices of column D, in order.
    pub order_plan: WorksheetPlan,
}

impl DfsSheet {
    pub fn evaluate(&self) -> Result<EvalState, SpecialError> {
        Ok(evaluate_workbook(&self.workbook)?)
    }

    /// The current vertex of every step.
    pub fn trace(&self, state: &EvalState) -> Vec<CellValue> {
        state.column(4, self.steps)
    }

    /// Vertices in discovery order.
    pub fn order(&self, state: &EvalState) -> Vec<Datum> {
        self.order_plan.read_rows(state).into_iter().map(|t| t[0].clone()).collect()
    }
}

pub fn gen_dfs(graph: &EdgeList, height: Option<u32>) -> Result<DfsSheet, SpecialError> {
    graph.check()?;
    let mut edges = graph.distinct_edges();
    // stable, so children keep their relative order
    edges.sort_by(|x, y| x.0.cmp(&y.0));
    let steps = (2 * edges.len() as u32).max(1);
    let height = height.unwrap_or(steps);
    if height < steps {
        return Err(SpecialError::Bounds { needed: steps, height });
    }

    let mut wb = Workbook::new(height)?;
    let na = Arc::new(r1c1("=NA()", Coord::new(1, 1)));
    for row in 1..=height {
        let (a, b) = match edges.get(row as usize - 1) {
            Some((a, b)) => (literal(a), literal(b)),
            None => (Cell::Formula(Arc::clone(&na)), Cell::Formula(Arc::clone(&na))),
        };
        wb.set(Coord::new(row, 1), a)?;
        wb.set(Coord::new(row, 2), b)?;
    }
    wb.set(Coord::new(1, 3), literal(&graph.start))?;

    let first = |wb: &mut Workbook, col: u32, text: &str| -> Result<(), SpecialError> {
        wb.set(Coord::new(1, col), Cell::Formula(Arc::new(r1c1(text, Coord::new(1, col)))))?;
        Ok(())
    };
    first(&mut wb, 4, "=R1C3")?;
    fill(&mut wb, 4, 2..=steps, "=IF(R[-1]C11,R[-1]C10,IF(R[-1]C12,R[-1]C9,R[-1]C7))")?;
    wb.set_value(Coord::new(1, 5), CellValue::Boolean(true))?;
    fill(&mut wb, 5, 2..=steps, "=ISERROR(MATCH(RC4,R1C4:R[-1]C4,0))")?;
    fill(&mut wb, 6, 2..=steps, "=SUMIFS(R1C13:R[-1]C13,R1C4:R[-1]C4,RC4,R1C5:R[-1]C5,TRUE)")?;
    first(&mut wb, 7, "=NA()")?;
    fill(
        &mut wb,
        7,
        2..=steps,
        "=IF(R[-1]C11,R[-1]C4,IF(R[-1]C12,R[-1]C7,INDEX(R1C7:R[-1]C7,RC6)))",
    )?;
    fill(&mut wb, 8, 2..=steps, "=SUMIFS(C13,C1,RC7,C2,RC4)")?;
    first(&mut wb, 9, "=NA()")?;
    fill(&mut wb, 9, 2..=steps, "=IF(INDEX(C1,RC8+1)=RC7,INDEX(C2,RC8+1),NA())")?;
    fill(&mut wb, 10, 1..=steps, "=IFERROR(INDEX(C2,MATCH(RC4,C1,0)),NA())")?;
    fill(&mut wb, 11, 1..=steps, "=AND(RC5,NOT(ISNA(RC10)))")?;
    fill(&mut wb, 12, 1..=steps, "=AND(NOT(ISNA(RC9)),OR(NOT(RC5),AND(RC5,ISNA(RC10))))")?;
    fill(&mut wb, 13, 1..=steps, "=ROW()")?;
    if steps < height {
        fill(&mut wb, 4, steps + 1..=height, "=NA()")?;
    }
    for (col, text) in [
        (1, "Edge source; edges sorted by source"),
        (2, "Edge target"),
        (3, "Start vertex"),
        (4, "cur_node"),
        (5, "first_time: cur_node not seen in earlier steps"),
        (6, "Step at which cur_node was new"),
        (7, "cur_parent"),
        (8, "Row of the edge (cur_parent, cur_node)"),
        (9, "next_sibling"),
        (10, "first_son"),
        (11, "Move to the first son next"),
        (12, "Move to the next sibling next"),
        (13, "Step number"),
    ] {
        wb.set_comment(Coord::new(1, col), text)?;
    }

    let known = Predicate::Not(Box::new(Predicate::IsNull(ScalarExpr::Column(1))));
    let e = RAExpr::DeDup(Box::new(RAExpr::Select(Box::new(RAExpr::reference("dfs", 1)), known)));
    let order_plan = emit_over(&e, &[("dfs", vec![4])], 14, height, DEFAULT_MAX_COLS)?;
    order_plan.write_ops(&mut wb)?;
    Ok(DfsSheet {
        workbook: wb,
        steps,
        order_plan,
    })
}
