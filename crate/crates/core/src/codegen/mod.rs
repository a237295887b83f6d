//! Lowering of relational algebra to a worksheet of fill-down formulas.
//!
//! Every relation occupies a group of columns. Rows holding a tuple come
//! first (standard form) or are mixed with padding rows (loose form); padding
//! rows hold `#N/A` in every column. SQL NULL is `#VALUE!`, made by
//! `INDEX(0,-1)`.

mod emit;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::eval::EvalState;
use crate::formula::{column_letters, parse_formula, Expr, FormulaError, Notation};
use crate::grid::{Cell, CellValue, Coord, GridError, Workbook, DEFAULT_MAX_COLS};
use crate::ra::{Database, Datum, RAExpr, RaError, Relation, Tuple};
use crate::sql::TableSchema;

pub use emit::required_height;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("the plan needs {required} columns but at most {max} are available")]
    Layout { required: u32, max: u32 },
    #[error("{0}")]
    Algebra(#[from] RaError),
    #[error("{op} over column {column} needs numeric data but the column holds {found}")]
    NonNumeric { op: &'static str, column: usize, found: String },
    #[error("table '{table}' has {rows} rows but the sheet has {height}")]
    Capacity { table: String, rows: usize, height: u32 },
    #[error("table '{0}' is missing from the data")]
    MissingTable(String),
    #[error("generated formula does not parse: {text}: {error}")]
    Formula { text: String, error: FormulaError },
    #[error("{0}")]
    Grid(#[from] GridError),
}

/// One worksheet column of an operator block.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    /// Row 1 content when it differs from the other rows.
    pub first: Option<Arc<Expr>>,
    /// Content of rows 2..H; `None` leaves them empty.
    pub rest: Option<Arc<Expr>>,
    pub comment: String,
}

impl ColumnSpec {
    pub fn row1(&self) -> Option<&Arc<Expr>> {
        self.first.as_ref().or(self.rest.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputBlock {
    pub table: String,
    pub start_col: u32,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpBlock {
    pub operator: String,
    pub start_col: u32,
    pub columns: Vec<ColumnSpec>,
    /// Columns holding the block's result relation.
    pub output: Vec<u32>,
}

impl OpBlock {
    pub fn width(&self) -> u32 {
        self.columns.len() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorksheetPlan {
    pub input_blocks: Vec<InputBlock>,
    pub op_blocks: Vec<OpBlock>,
    pub output_cols: Vec<u32>,
    pub height: u32,
}

impl WorksheetPlan {
    /// Total number of columns used.
    pub fn width(&self) -> u32 {
        let inputs = self.input_blocks.iter().map(|b| b.start_col + b.arity as u32 - 1);
        let ops = self.op_blocks.iter().map(|b| b.start_col + b.width() - 1);
        inputs.chain(ops).max().unwrap_or(0)
    }

    pub fn input(&self, table: &str) -> Option<&InputBlock> {
        self.input_blocks.iter().find(|b| b.table.eq_ignore_ascii_case(table))
    }

    /// Builds the empty worksheet: inputs filled with padding rows, operator
    /// formulas in row 1 and filled down to the last row. Intermediate
    /// columns are hidden and row-1 cells carry the column descriptions.
    pub fn to_workbook(&self) -> Result<Workbook, PlanError> {
        let mut wb = Workbook::with_max_cols(self.height, DEFAULT_MAX_COLS.max(self.width()))?;
        let na = Arc::new(formula("=NA()")?);
        for b in &self.input_blocks {
            for j in 0..b.arity as u32 {
                let col = b.start_col + j;
                for row in 1..=self.height {
                    wb.set_formula(Coord::new(row, col), Arc::clone(&na))?;
                }
                let what = if j == 0 {
                    format!("Input table {} ({} columns): column 1", b.table, b.arity)
                } else {
                    format!("Input table {}: column {}", b.table, j + 1)
                };
                wb.set_comment(Coord::new(1, col), what)?;
            }
        }
        self.write_ops(&mut wb)?;
        Ok(wb)
    }

    /// Writes the operator blocks into an existing workbook.
    pub fn write_ops(&self, wb: &mut Workbook) -> Result<(), PlanError> {
        for b in &self.op_blocks {
            for (j, c) in b.columns.iter().enumerate() {
                let col = b.start_col + j as u32;
                if let Some(f) = c.row1() {
                    wb.set_formula(Coord::new(1, col), Arc::clone(f))?;
                }
                if let Some(f) = &c.rest {
                    for row in 2..=self.height {
                        wb.set_formula(Coord::new(row, col), Arc::clone(f))?;
                    }
                }
                wb.set_comment(Coord::new(1, col), c.comment.clone())?;
                if !self.output_cols.contains(&col) {
                    wb.hide_column(col);
                }
            }
        }
        Ok(())
    }

    /// Writes table data into the input blocks. NULL becomes `=INDEX(0,-1)`,
    /// rows below the data `=NA()`.
    pub fn load(&self, wb: &mut Workbook, db: &Database) -> Result<(), PlanError> {
        let na = Arc::new(formula("=NA()")?);
        let null = Arc::new(formula("=INDEX(0,-1)")?);
        for b in &self.input_blocks {
            let rel = db
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(&b.table))
                .map(|(_, r)| r)
                .ok_or_else(|| PlanError::MissingTable(b.table.clone()))?;
            if rel.arity != b.arity {
                return Err(RaError::Arity {
                    table: b.table.clone(),
                    expected: b.arity,
                    actual: rel.arity,
                }
                .into());
            }
            let rows = Relation::from_rows(rel.arity, rel.rows.iter().cloned());
            if rows.len() > self.height as usize {
                return Err(PlanError::Capacity {
                    table: b.table.clone(),
                    rows: rows.len(),
                    height: self.height,
                });
            }
            for row in 1..=self.height {
                let tuple = rows.rows.get(row as usize - 1);
                for j in 0..b.arity {
                    let at = Coord::new(row, b.start_col + j as u32);
                    let cell = match tuple.map(|t| &t[j]) {
                        None => Cell::Formula(Arc::clone(&na)),
                        Some(Datum::Null) => Cell::Formula(Arc::clone(&null)),
                        Some(d) => Cell::Literal(d.to_cell().expect("non-null")),
                    };
                    wb.set(at, cell)?;
                }
            }
        }
        Ok(())
    }

    /// Output tuples in sheet order. Rows with `#N/A` are padding; other
    /// errors read as NULL.
    pub fn read_rows(&self, state: &EvalState) -> Vec<Tuple> {
        (1..=self.height)
            .filter_map(|row| {
                let cells: Vec<&CellValue> = self.output_cols.iter().map(|&c| state.value(Coord::new(row, c))).collect();
                if cells.iter().any(|v| v.is_na()) {
                    return None;
                }
                Some(cells.into_iter().map(Datum::from_cell).collect())
            })
            .collect()
    }

    pub fn read_output(&self, state: &EvalState) -> Relation {
        Relation::from_rows(self.output_cols.len(), self.read_rows(state))
    }

    /// One line per block: columns, operator.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for b in &self.input_blocks {
            out.push_str(&format!(
                "{}  input {} ({} columns)\n",
                span(b.start_col, b.arity as u32),
                b.table,
                b.arity
            ));
        }
        for b in &self.op_blocks {
            out.push_str(&format!("{}  {}\n", span(b.start_col, b.width()), b.operator));
        }
        let outs: Vec<String> = self.output_cols.iter().map(|&c| column_letters(c)).collect();
        out.push_str(&format!(
            "output columns: {}; height {} rows; {} columns in total\n",
            outs.join(", "),
            self.height,
            self.width()
        ));
        out
    }
}

fn span(start: u32, width: u32) -> String {
    if width <= 1 {
        column_letters(start)
    } else {
        format!("{}:{}", column_letters(start), column_letters(start + width - 1))
    }
}

pub(crate) fn formula(text: &str) -> Result<Expr, PlanError> {
    parse_formula(text, Notation::R1C1, Coord::new(2, 1)).map_err(|error| PlanError::Formula {
        text: text.to_string(),
        error,
    })
}

/// Lowers an expression to a worksheet plan of the given height.
pub fn emit_plan(e: &RAExpr, schemas: &[TableSchema], height: u32) -> Result<WorksheetPlan, PlanError> {
    emit_plan_with(e, schemas, height, DEFAULT_MAX_COLS)
}

/// As [`emit_plan`], with an explicit column budget.
pub fn emit_plan_with(
    e: &RAExpr,
    schemas: &[TableSchema],
    height: u32,
    max_cols: u32,
) -> Result<WorksheetPlan, PlanError> {
    e.arity()?;
    if height == 0 {
        return Err(GridError::ZeroHeight.into());
    }
    let mut b = emit::Builder::new(schemas, height, max_cols);
    b.plan(e)
}

/// Deliberate template defects, for testing the differential checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Semijoin rows without a partner are kept instead of dropped.
    SemijoinKeepsAll,
}

/// As [`emit_plan`], with a corrupted template.
pub fn emit_plan_faulty(e: &RAExpr, schemas: &[TableSchema], height: u32, fault: Fault) -> Result<WorksheetPlan, PlanError> {
    e.arity()?;
    if height == 0 {
        return Err(GridError::ZeroHeight.into());
    }
    let mut b = emit::Builder::new(schemas, height, DEFAULT_MAX_COLS);
    b.fault = Some(fault);
    b.plan(e)
}

/// Lowers `e` over relations that already occupy sheet columns. Generated
/// blocks start at `first_col` or after the rightmost placed column.
pub fn emit_over(
    e: &RAExpr,
    placed: &[(&str, Vec<u32>)],
    first_col: u32,
    height: u32,
    max_cols: u32,
) -> Result<WorksheetPlan, PlanError> {
    e.arity()?;
    if height == 0 {
        return Err(GridError::ZeroHeight.into());
    }
    let mut b = emit::Builder::new(&[], height, max_cols);
    b.skip_to(first_col);
    for (name, cols) in placed {
        b.place(name, cols.clone(), vec![None; cols.len()]);
    }
    b.plan(e)
}

/// Generates, loads and evaluates a plan; returns the output rows in order.
pub fn run_plan(plan: &WorksheetPlan, db: &Database) -> Result<Vec<Tuple>, RunError> {
    let mut wb = plan.to_workbook()?;
    plan.load(&mut wb, db)?;
    let state = crate::eval::evaluate_workbook(&wb)?;
    Ok(plan.read_rows(&state))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Eval(#[from] crate::eval::EvalError),
}

/// Column descriptions keyed by column, for display.
pub fn comments(plan: &WorksheetPlan) -> BTreeMap<u32, String> {
    let mut out = BTreeMap::new();
    for b in &plan.op_blocks {
        for (j, c) in b.columns.iter().enumerate() {
            out.insert(b.start_col + j as u32, c.comment.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests;
