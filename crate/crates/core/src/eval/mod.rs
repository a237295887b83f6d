//! Workbook recalculation.

mod criteria;
mod engine;
mod functions;
mod value;

use std::fmt::Write as _;

pub use criteria::{CompareOp, Criterion};
pub use functions::{
    counta, eval_countifs, eval_index, eval_index_scalar, eval_match, eval_sumifs, modulo, power, quotient, CellSeq,
};
pub use value::{compare_text, compare_values, to_bool, to_number, to_text};

use crate::formula::Expr;
use crate::grid::{CellValue, Coord, Workbook};
use engine::{Engine, Mode};

/// Stack reserved for the evaluation thread; deep reference chains recurse.
const EVAL_STACK_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("circular reference through {}", format_cells(.cells))]
    CircularReference { cells: Vec<Coord> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cell {0} was read before it was computed")]
    ReadBeforeFinal(Coord),
}

fn format_cells(cells: &[Coord]) -> String {
    let mut s = String::new();
    for (i, c) in cells.iter().take(12).enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{c}");
    }
    if cells.len() > 12 {
        let _ = write!(s, " and {} more", cells.len() - 12);
    }
    s
}

/// Computed values of every cell in a workbook.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalState {
    rows: u32,
    cols: u32,
    height: u32,
    values: Vec<CellValue>,
}

static BLANK: CellValue = CellValue::Blank;

impl EvalState {
    pub fn value(&self, at: Coord) -> &CellValue {
        if at.row >= 1 && at.col >= 1 && at.row <= self.rows && at.col <= self.cols {
            &self.values[(at.col as usize - 1) * self.rows as usize + (at.row as usize - 1)]
        } else {
            &BLANK
        }
    }

    /// Rows `1..=rows` of one column.
    pub fn column(&self, col: u32, rows: u32) -> Vec<CellValue> {
        (1..=rows).map(|r| self.value(Coord::new(r, col)).clone()).collect()
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn from_engine(engine: Engine<'_>, height: u32) -> EvalState {
        let (rows, cols, values) = engine.into_values();
        EvalState {
            rows,
            cols,
            height,
            values,
        }
    }
}

/// Computes every cell on demand, failing on the first circular reference.
///
/// Runs on a dedicated thread with a large stack, so long chains of
/// references do not overflow.
pub fn evaluate_workbook(wb: &Workbook) -> Result<EvalState, EvalError> {
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .name("evaluate".into())
            .stack_size(EVAL_STACK_BYTES)
            .spawn_scoped(scope, || {
                let mut engine = Engine::new(wb, Mode::Demand);
                engine.run_all()?;
                Ok(EvalState::from_engine(engine, wb.height()))
            })
            .expect("spawn evaluation thread")
            .join()
            .expect("evaluation thread panicked")
    })
}

/// Computes cells in a topological order of their static references.
///
/// Every read must find its cell already final. Workbooks using OFFSET are
/// rejected because their dependencies are only known at run time.
pub fn evaluate_static(wb: &Workbook) -> Result<EvalState, EvalError> {
    let mut engine = Engine::new(wb, Mode::Static);
    let order = engine.static_order()?;
    engine.run_in_order(&order)?;
    Ok(EvalState::from_engine(engine, wb.height()))
}

/// Evaluates a standalone formula as if it sat at `anchor`.
pub fn evaluate_formula(wb: &Workbook, expr: &Expr, anchor: Coord) -> Result<CellValue, EvalError> {
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(EVAL_STACK_BYTES)
            .spawn_scoped(scope, || Engine::new(wb, Mode::Demand).eval(expr, anchor))
            .expect("spawn evaluation thread")
            .join()
            .expect("evaluation thread panicked")
    })
}
