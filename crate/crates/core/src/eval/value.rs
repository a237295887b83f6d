//! Scalar coercions and comparisons.

use std::cmp::Ordering;

use crate::grid::{format_number, CellValue, ErrorKind};

pub type Scalar<T> = Result<T, ErrorKind>;

pub fn to_number(v: &CellValue) -> Scalar<f64> {
    match v {
        CellValue::Number(x) => Ok(*x),
        CellValue::Boolean(b) => Ok(if *b { 1.0 } else { 0.0 }),
        CellValue::Blank => Ok(0.0),
        CellValue::Text(s) => parse_numeric_text(s).ok_or(ErrorKind::Value),
        CellValue::Error(k) => Err(*k),
    }
}

pub fn parse_numeric_text(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t.contains(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn to_text(v: &CellValue) -> Scalar<String> {
    match v {
        CellValue::Number(x) => Ok(format_number(*x)),
        CellValue::Text(s) => Ok(s.clone()),
        CellValue::Boolean(true) => Ok("TRUE".into()),
        CellValue::Boolean(false) => Ok("FALSE".into()),
        CellValue::Blank => Ok(String::new()),
        CellValue::Error(k) => Err(*k),
    }
}

pub fn to_bool(v: &CellValue) -> Scalar<bool> {
    match v {
        CellValue::Boolean(b) => Ok(*b),
        CellValue::Number(x) => Ok(*x != 0.0),
        CellValue::Blank => Ok(false),
        CellValue::Text(s) if s.eq_ignore_ascii_case("TRUE") => Ok(true),
        CellValue::Text(s) if s.eq_ignore_ascii_case("FALSE") => Ok(false),
        CellValue::Text(_) => Err(ErrorKind::Value),
        CellValue::Error(k) => Err(*k),
    }
}

fn type_rank(v: &CellValue) -> u8 {
    match v {
        CellValue::Number(_) | CellValue::Blank => 0,
        CellValue::Text(_) => 1,
        CellValue::Boolean(_) => 2,
        CellValue::Error(_) => 3,
    }
}

/// Case-insensitive text ordering.
pub fn compare_text(a: &str, b: &str) -> Ordering {
    let la = a.chars().flat_map(char::to_lowercase);
    let lb = b.chars().flat_map(char::to_lowercase);
    la.cmp(lb)
}

/// Ordering used by comparison operators on non-error values.
///
/// Numbers sort before text, text before booleans. A blank operand takes the
/// empty value of the other operand's type.
pub fn compare_values(a: &CellValue, b: &CellValue) -> Ordering {
    use CellValue::*;
    match (a, b) {
        (Blank, Blank) => Ordering::Equal,
        (Blank, Text(s)) => compare_text("", s),
        (Text(s), Blank) => compare_text(s, ""),
        (Blank, Boolean(x)) => false.cmp(x),
        (Boolean(x), Blank) => x.cmp(&false),
        (Blank, Number(y)) => 0.0f64.total_cmp(y),
        (Number(x), Blank) => x.total_cmp(&0.0),
        (Number(x), Number(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Text(x), Text(y)) => compare_text(x, y),
        (Boolean(x), Boolean(y)) => x.cmp(y),
        _ => type_rank(a).cmp(&type_rank(b)),
    }
}

/// Same-type ordering for lookups and criteria; `None` across types.
pub fn compare_same_type(cell: &CellValue, target: &CellValue) -> Option<Ordering> {
    use CellValue::*;
    match (cell, target) {
        (Number(x), Number(y)) => x.partial_cmp(y),
        (Text(x), Text(y)) => Some(compare_text(x, y)),
        (Boolean(x), Boolean(y)) => Some(x.cmp(y)),
        _ => None,
    }
}
