//! COUNTIF / COUNTIFS / SUMIFS criteria.

use std::cmp::Ordering;

use crate::grid::{CellValue, ErrorKind};

use super::value::{compare_same_type, compare_text, parse_numeric_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    /// `Equals(Blank)` matches blank cells and empty text.
    Equals(CellValue),
    Compare(CompareOp, CellValue),
    ErrorEquals(ErrorKind),
}

impl Criterion {
    /// Interprets an evaluated criterion argument.
    ///
    /// Text starting with a comparison operator is split into operator and
    /// operand; the operand is read as a number, TRUE/FALSE, an error token,
    /// or text, in that order. Any other value means equality. No wildcards.
    pub fn parse(value: &CellValue) -> Criterion {
        let s = match value {
            CellValue::Error(k) => return Criterion::ErrorEquals(*k),
            CellValue::Text(s) => s,
            other => return Criterion::Equals(other.clone()),
        };
        let (op, rest) = if let Some(r) = s.strip_prefix("<=") {
            (Some(CompareOp::Le), r)
        } else if let Some(r) = s.strip_prefix(">=") {
            (Some(CompareOp::Ge), r)
        } else if let Some(r) = s.strip_prefix("<>") {
            (Some(CompareOp::Ne), r)
        } else if let Some(r) = s.strip_prefix('<') {
            (Some(CompareOp::Lt), r)
        } else if let Some(r) = s.strip_prefix('>') {
            (Some(CompareOp::Gt), r)
        } else if let Some(r) = s.strip_prefix('=') {
            (None, r)
        } else {
            return Criterion::Equals(CellValue::Text(s.clone()));
        };
        let operand = operand_value(rest);
        match (op, operand) {
            (None, CellValue::Error(k)) => Criterion::ErrorEquals(k),
            (None, v) => Criterion::Equals(v),
            (Some(op), v) => Criterion::Compare(op, v),
        }
    }

    pub fn matches(&self, cell: &CellValue) -> bool {
        match self {
            Criterion::ErrorEquals(k) => matches!(cell, CellValue::Error(c) if c == k),
            Criterion::Equals(target) => equals(cell, target),
            Criterion::Compare(CompareOp::Ne, target) => !equals(cell, target),
            Criterion::Compare(op, target) => match compare_same_type(cell, target) {
                Some(ord) => match op {
                    CompareOp::Lt => ord == Ordering::Less,
                    CompareOp::Le => ord != Ordering::Greater,
                    CompareOp::Gt => ord == Ordering::Greater,
                    CompareOp::Ge => ord != Ordering::Less,
                    CompareOp::Ne => unreachable!(),
                },
                None => false,
            },
        }
    }
}

fn operand_value(rest: &str) -> CellValue {
    if rest.is_empty() {
        return CellValue::Blank;
    }
    if let Some(x) = parse_numeric_text(rest) {
        return CellValue::number(x);
    }
    if rest.eq_ignore_ascii_case("TRUE") {
        return CellValue::Boolean(true);
    }
    if rest.eq_ignore_ascii_case("FALSE") {
        return CellValue::Boolean(false);
    }
    if let Some(k) = ErrorKind::from_token(rest) {
        return CellValue::Error(k);
    }
    CellValue::Text(rest.to_string())
}

fn equals(cell: &CellValue, target: &CellValue) -> bool {
    match (cell, target) {
        (CellValue::Blank, CellValue::Blank) => true,
        (CellValue::Text(s), CellValue::Blank) | (CellValue::Blank, CellValue::Text(s)) => s.is_empty(),
        (CellValue::Text(a), CellValue::Text(b)) => compare_text(a, b) == Ordering::Equal,
        (CellValue::Error(a), CellValue::Error(b)) => a == b,
        _ => compare_same_type(cell, target) == Some(Ordering::Equal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crit(s: &str) -> Criterion {
        Criterion::parse(&CellValue::text(s))
    }

    #[test]
    fn operator_prefixes() {
        assert_eq!(crit("<3"), Criterion::Compare(CompareOp::Lt, CellValue::Number(3.0)));
        assert_eq!(crit(">=1E300"), Criterion::Compare(CompareOp::Ge, CellValue::Number(1e300)));
        assert_eq!(crit("<abc"), Criterion::Compare(CompareOp::Lt, CellValue::text("abc")));
        assert_eq!(crit("<>#N/A"), Criterion::Compare(CompareOp::Ne, CellValue::Error(ErrorKind::Na)));
        assert_eq!(crit("=#VALUE!"), Criterion::ErrorEquals(ErrorKind::Value));
        assert_eq!(crit("a"), Criterion::Equals(CellValue::text("a")));
        assert_eq!(crit("3"), Criterion::Equals(CellValue::text("3")));
    }

    #[test]
    fn matching_rules() {
        let lt = crit("<3");
        assert!(lt.matches(&CellValue::Number(2.0)));
        assert!(!lt.matches(&CellValue::Number(3.0)));
        assert!(!lt.matches(&CellValue::text("1")));
        assert!(!lt.matches(&CellValue::Error(ErrorKind::Na)));
        assert!(crit("a").matches(&CellValue::text("A")));
        assert!(!crit("3").matches(&CellValue::Number(3.0)));
        let blank = Criterion::parse(&CellValue::Blank);
        assert!(blank.matches(&CellValue::Blank));
        assert!(blank.matches(&CellValue::text("")));
        assert!(!blank.matches(&CellValue::Number(0.0)));
        let na = Criterion::parse(&CellValue::Error(ErrorKind::Na));
        assert!(na.matches(&CellValue::Error(ErrorKind::Na)));
        assert!(!na.matches(&CellValue::Error(ErrorKind::Value)));
        let not_na = crit("<>#N/A");
        assert!(not_na.matches(&CellValue::Number(1.0)));
        assert!(not_na.matches(&CellValue::Error(ErrorKind::Value)));
        assert!(!not_na.matches(&CellValue::Error(ErrorKind::Na)));
        assert!(Criterion::parse(&CellValue::Boolean(true)).matches(&CellValue::Boolean(true)));
        assert!(!Criterion::parse(&CellValue::Boolean(true)).matches(&CellValue::Number(1.0)));
    }
}
