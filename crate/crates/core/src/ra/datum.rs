use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::eval::{compare_text, compare_values};
use crate::grid::{format_number, CellValue};

/// A relational cell value. Text compares case-insensitively, as in the
/// spreadsheet's comparison and lookup functions.
#[derive(Debug, Clone)]
pub enum Datum {
    Null,
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Datum {
    pub fn number(x: f64) -> Datum {
        if x.is_finite() {
            Datum::Number(if x == 0.0 { 0.0 } else { x })
        } else {
            Datum::Null
        }
    }

    pub fn text(s: impl Into<String>) -> Datum {
        Datum::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Datum::Null)
    }

    /// The spreadsheet value of a non-null datum; Null becomes `None`.
    pub fn to_cell(&self) -> Option<CellValue> {
        match self {
            Datum::Null => None,
            Datum::Number(x) => Some(CellValue::Number(*x)),
            Datum::Text(s) => Some(CellValue::Text(s.clone())),
            Datum::Bool(b) => Some(CellValue::Boolean(*b)),
        }
    }

    /// Reads an output cell: errors (other than row padding) and blanks are Null.
    pub fn from_cell(v: &CellValue) -> Datum {
        match v {
            CellValue::Number(x) => Datum::number(*x),
            CellValue::Text(s) => Datum::Text(s.clone()),
            CellValue::Boolean(b) => Datum::Bool(*b),
            CellValue::Blank | CellValue::Error(_) => Datum::Null,
        }
    }

    /// SQL comparison: `None` when either side is Null.
    pub fn sql_cmp(&self, other: &Datum) -> Option<Ordering> {
        Some(compare_values(&self.to_cell()?, &other.to_cell()?))
    }

    fn rank(&self) -> u8 {
        match self {
            Datum::Null => 0,
            Datum::Number(_) => 1,
            Datum::Text(_) => 2,
            Datum::Bool(_) => 3,
        }
    }
}

/// Tuple identity: Null equals Null.
impl PartialEq for Datum {
    fn eq(&self, other: &Datum) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Datum {}

impl Ord for Datum {
    fn cmp(&self, other: &Datum) -> Ordering {
        match (self, other) {
            (Datum::Number(a), Datum::Number(b)) => a.total_cmp(b),
            (Datum::Text(a), Datum::Text(b)) => compare_text(a, b),
            (Datum::Bool(a), Datum::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Datum {
    fn partial_cmp(&self, other: &Datum) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Datum {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.rank().hash(h);
        match self {
            Datum::Null => {}
            Datum::Number(x) => x.to_bits().hash(h),
            Datum::Text(s) => {
                for c in s.chars().flat_map(char::to_lowercase) {
                    c.hash(h);
                }
            }
            Datum::Bool(b) => b.hash(h),
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Null => f.write_str("NULL"),
            Datum::Number(x) => f.write_str(&format_number(*x)),
            Datum::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Datum::Bool(true) => f.write_str("TRUE"),
            Datum::Bool(false) => f.write_str("FALSE"),
        }
    }
}

pub type Tuple = Vec<Datum>;

/// A relation: distinct tuples of one arity, in a meaningful order (sorting
/// is observable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub arity: usize,
    pub rows: Vec<Tuple>,
}

impl Relation {
    pub fn new(arity: usize) -> Relation {
        Relation { arity, rows: Vec::new() }
    }

    /// Builds a relation, dropping repeated tuples (first occurrence wins).
    pub fn from_rows(arity: usize, rows: impl IntoIterator<Item = Tuple>) -> Relation {
        let mut seen = std::collections::HashSet::new();
        let rows = rows.into_iter().filter(|r| seen.insert(r.clone())).collect();
        Relation { arity, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.rows.contains(t)
    }

    /// Set equality, ignoring order.
    pub fn same_set(&self, other: &Relation) -> bool {
        let mut a = self.rows.clone();
        let mut b = other.rows.clone();
        a.sort();
        b.sort();
        a.dedup();
        b.dedup();
        self.arity == other.arity && a == b
    }
}
