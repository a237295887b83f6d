//! Cell values, addressing, and the sparse workbook grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::formula::Expr;

/// Default logical height of a workbook.
pub const DEFAULT_HEIGHT: u32 = 1024;
/// Column limit of mainstream spreadsheet products (XFD).
pub const DEFAULT_MAX_COLS: u32 = 16_384;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("cell R{row}C{col} is outside the grid (height {height}, {max_cols} columns)")]
    OutOfBounds {
        row: i64,
        col: i64,
        height: u32,
        max_cols: u32,
    },
    #[error("reference resolves to R{row}C{col}, which is not a valid cell")]
    RefResolution { row: i64, col: i64 },
    #[error("workbook height must be positive")]
    ZeroHeight,
}

/// Spreadsheet error values.
///
/// `Na` doubles as the "no row here" marker and `Value` as the SQL `NULL`
/// marker in generated worksheets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    Na,
    Value,
    Div0,
    Ref,
    Name,
    Num,
}

impl ErrorKind {
    pub fn token(self) -> &'static str {
        match self {
            ErrorKind::Na => "#N/A",
            ErrorKind::Value => "#VALUE!",
            ErrorKind::Div0 => "#DIV/0!",
            ErrorKind::Ref => "#REF!",
            ErrorKind::Name => "#NAME?",
            ErrorKind::Num => "#NUM!",
        }
    }

    /// Accepts the canonical tokens plus the `#N/A!` spelling.
    pub fn from_token(token: &str) -> Option<ErrorKind> {
        let upper = token.to_ascii_uppercase();
        Some(match upper.as_str() {
            "#N/A" | "#N/A!" => ErrorKind::Na,
            "#VALUE!" => ErrorKind::Value,
            "#DIV/0!" => ErrorKind::Div0,
            "#REF!" => ErrorKind::Ref,
            "#NAME?" => ErrorKind::Name,
            "#NUM!" => ErrorKind::Num,
            _ => return None,
        })
    }

    /// Every token spelling, longest first, for prefix scanning.
    pub(crate) const TOKENS: [(&'static str, ErrorKind); 7] = [
        ("#DIV/0!", ErrorKind::Div0),
        ("#VALUE!", ErrorKind::Value),
        ("#NAME?", ErrorKind::Name),
        ("#N/A!", ErrorKind::Na),
        ("#NUM!", ErrorKind::Num),
        ("#REF!", ErrorKind::Ref),
        ("#N/A", ErrorKind::Na),
    ];
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Text(String),
    Boolean(bool),
    Blank,
    Error(ErrorKind),
}

impl CellValue {
    /// Builds a number, mapping NaN and infinities to `#NUM!`.
    pub fn number(x: f64) -> CellValue {
        if x.is_finite() {
            // -0 and 0 are the same spreadsheet value
            CellValue::Number(if x == 0.0 { 0.0 } else { x })
        } else {
            CellValue::Error(ErrorKind::Num)
        }
    }

    pub fn text(s: impl Into<String>) -> CellValue {
        CellValue::Text(s.into())
    }

    pub fn is_error(&self) -> bool {
        matches!(self, CellValue::Error(_))
    }

    pub fn is_na(&self) -> bool {
        matches!(self, CellValue::Error(ErrorKind::Na))
    }

    pub fn error_kind(&self) -> Option<ErrorKind> {
        match self {
            CellValue::Error(kind) => Some(*kind),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// Literal spelling as it would appear in a formula or grid file.
    pub fn literal_text(&self) -> String {
        match self {
            CellValue::Number(x) => format_number(*x),
            CellValue::Text(s) => quote_text(s),
            CellValue::Boolean(true) => "TRUE".to_string(),
            CellValue::Boolean(false) => "FALSE".to_string(),
            CellValue::Blank => String::new(),
            CellValue::Error(kind) => kind.token().to_string(),
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Text(s) => f.write_str(s),
            other => f.write_str(&other.literal_text()),
        }
    }
}

/// Shortest text that parses back to exactly `x`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs();
    if x.fract() == 0.0 && magnitude < 1e15 {
        return format!("{}", x as i64);
    }
    if !(1e-5..1e15).contains(&magnitude) {
        return format!("{x:e}").replace('e', "E");
    }
    format!("{x}")
}

pub(crate) fn quote_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Absolute 1-based cell coordinates. Ordered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub row: u32,
    pub col: u32,
}

impl Coord {
    pub const fn new(row: u32, col: u32) -> Coord {
        Coord { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}C{}", self.row, self.col)
    }
}

/// One axis of a reference: `R5`, `R[-1]`, or a bare `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefComponent {
    Absolute(u32),
    Relative(i32),
    Current,
}

impl RefComponent {
    pub fn resolve(self, anchor: u32) -> i64 {
        match self {
            RefComponent::Absolute(n) => i64::from(n),
            RefComponent::Relative(d) => i64::from(anchor) + i64::from(d),
            RefComponent::Current => i64::from(anchor),
        }
    }

    /// Relative offset, with zero spelled as `Current`.
    pub fn relative(delta: i32) -> RefComponent {
        if delta == 0 {
            RefComponent::Current
        } else {
            RefComponent::Relative(delta)
        }
    }

    /// `Current` and `Relative(0)` address the same cell; `Current` is canonical.
    pub fn normalized(self) -> RefComponent {
        match self {
            RefComponent::Relative(0) => RefComponent::Current,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub row: RefComponent,
    pub col: RefComponent,
}

impl CellRef {
    pub const fn new(row: RefComponent, col: RefComponent) -> CellRef {
        CellRef { row, col }
    }

    pub const fn absolute(row: u32, col: u32) -> CellRef {
        CellRef::new(RefComponent::Absolute(row), RefComponent::Absolute(col))
    }

    /// Same row, absolute column (`RCn`).
    pub const fn row_local(col: u32) -> CellRef {
        CellRef::new(RefComponent::Current, RefComponent::Absolute(col))
    }

    pub fn normalized(self) -> CellRef {
        CellRef::new(self.row.normalized(), self.col.normalized())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RangeRef {
    Area { start: CellRef, end: CellRef },
    Column(RefComponent),
    Row(RefComponent),
}

impl RangeRef {
    pub fn normalized(self) -> RangeRef {
        match self {
            RangeRef::Area { start, end } => RangeRef::Area {
                start: start.normalized(),
                end: end.normalized(),
            },
            RangeRef::Column(c) => RangeRef::Column(c.normalized()),
            RangeRef::Row(r) => RangeRef::Row(r.normalized()),
        }
    }
}

/// Resolves a possibly relative reference against the cell that contains it.
pub fn resolve_ref(reference: CellRef, anchor: Coord) -> Result<Coord, GridError> {
    let row = reference.row.resolve(anchor.row);
    let col = reference.col.resolve(anchor.col);
    if row < 1 || col < 1 || row > i64::from(u32::MAX) || col > i64::from(u32::MAX) {
        return Err(GridError::RefResolution { row, col });
    }
    Ok(Coord::new(row as u32, col as u32))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Literal(CellValue),
    Formula(Arc<Expr>),
}

impl Cell {
    pub fn formula(expr: Expr) -> Cell {
        Cell::Formula(Arc::new(expr))
    }
}

static BLANK_CELL: Cell = Cell::Literal(CellValue::Blank);

/// Sparse single-sheet grid with a fixed logical height.
#[derive(Debug, Clone, PartialEq)]
pub struct Workbook {
    cells: BTreeMap<Coord, Cell>,
    height: u32,
    max_cols: u32,
    comments: BTreeMap<Coord, String>,
    hidden_columns: BTreeSet<u32>,
}

impl Workbook {
    pub fn new(height: u32) -> Result<Workbook, GridError> {
        Workbook::with_max_cols(height, DEFAULT_MAX_COLS)
    }

    pub fn with_max_cols(height: u32, max_cols: u32) -> Result<Workbook, GridError> {
        if height == 0 || max_cols == 0 {
            return Err(GridError::ZeroHeight);
        }
        Ok(Workbook {
            cells: BTreeMap::new(),
            height,
            max_cols,
            comments: BTreeMap::new(),
            hidden_columns: BTreeSet::new(),
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn max_cols(&self) -> u32 {
        self.max_cols
    }

    pub fn contains(&self, at: Coord) -> bool {
        at.row >= 1 && at.col >= 1 && at.row <= self.height && at.col <= self.max_cols
    }

    fn check(&self, at: Coord) -> Result<(), GridError> {
        if self.contains(at) {
            Ok(())
        } else {
            Err(GridError::OutOfBounds {
                row: i64::from(at.row),
                col: i64::from(at.col),
                height: self.height,
                max_cols: self.max_cols,
            })
        }
    }

    /// Stores a cell. Writing a blank literal clears the cell.
    pub fn set(&mut self, at: Coord, cell: Cell) -> Result<(), GridError> {
        self.check(at)?;
        if matches!(cell, Cell::Literal(CellValue::Blank)) {
            self.cells.remove(&at);
        } else {
            self.cells.insert(at, cell);
        }
        Ok(())
    }

    pub fn set_value(&mut self, at: Coord, value: CellValue) -> Result<(), GridError> {
        self.set(at, Cell::Literal(value))
    }

    pub fn set_formula(&mut self, at: Coord, expr: Arc<Expr>) -> Result<(), GridError> {
        self.set(at, Cell::Formula(expr))
    }

    /// Unstored cells read as blank.
    pub fn get(&self, at: Coord) -> &Cell {
        self.cells.get(&at).unwrap_or(&BLANK_CELL)
    }

    pub fn is_stored(&self, at: Coord) -> bool {
        self.cells.contains_key(&at)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Coord, &Cell)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Highest column holding a stored cell, or 0 for an empty sheet.
    pub fn used_columns(&self) -> u32 {
        self.cells.keys().map(|c| c.col).max().unwrap_or(0)
    }

    pub fn set_comment(&mut self, at: Coord, text: impl Into<String>) -> Result<(), GridError> {
        self.check(at)?;
        self.comments.insert(at, text.into());
        Ok(())
    }

    pub fn comment(&self, at: Coord) -> Option<&str> {
        self.comments.get(&at).map(String::as_str)
    }

    pub fn comments(&self) -> impl Iterator<Item = (Coord, &str)> {
        self.comments.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn hide_column(&mut self, col: u32) {
        if col >= 1 && col <= self.max_cols {
            self.hidden_columns.insert(col);
        }
    }

    pub fn hidden_columns(&self) -> impl Iterator<Item = u32> + '_ {
        self.hidden_columns.iter().copied()
    }

    pub fn is_hidden(&self, col: u32) -> bool {
        self.hidden_columns.contains(&col)
    }
}

/// Read a stored cell; free-function form of [`Workbook::get`].
pub fn read_cell(wb: &Workbook, at: Coord) -> &Cell {
    wb.get(at)
}
