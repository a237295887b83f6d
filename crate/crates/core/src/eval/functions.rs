//! Range functions over already evaluated cells.

use std::cmp::Ordering;

use crate::grid::{CellValue, ErrorKind};

use super::criteria::Criterion;
use super::value::{compare_same_type, to_number};

/// A one-dimensional run of evaluated cells.
pub trait CellSeq {
    fn len(&self) -> usize;
    fn at(&self, i: usize) -> &CellValue;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl CellSeq for [CellValue] {
    fn len(&self) -> usize {
        <[CellValue]>::len(self)
    }

    fn at(&self, i: usize) -> &CellValue {
        &self[i]
    }
}

impl CellSeq for Vec<CellValue> {
    fn len(&self) -> usize {
        Vec::len(self)
    }

    fn at(&self, i: usize) -> &CellValue {
        &self[i]
    }
}

/// MATCH. Mode 0 is exact, mode 1 finds the last value not above `lookup`
/// in an ascending run, mode -1 the last value not below it in a descending run.
pub fn eval_match(lookup: &CellValue, range: &dyn CellSeq, mode: i32) -> CellValue {
    if mode == 0 {
        if let CellValue::Error(kind) = lookup {
            if *kind != ErrorKind::Na {
                return lookup.clone();
            }
            return (0..range.len())
                .find(|&i| range.at(i) == lookup)
                .map_or(CellValue::Error(ErrorKind::Na), position);
        }
        if matches!(lookup, CellValue::Blank) {
            return CellValue::Error(ErrorKind::Na);
        }
        return (0..range.len())
            .find(|&i| compare_same_type(range.at(i), lookup) == Some(Ordering::Equal))
            .map_or(CellValue::Error(ErrorKind::Na), position);
    }
    if lookup.is_error() {
        return lookup.clone();
    }
    let past = if mode > 0 { Ordering::Greater } else { Ordering::Less };
    let mut last = None;
    for i in 0..range.len() {
        match compare_same_type(range.at(i), lookup) {
            Some(ord) if ord == past => break,
            Some(_) => last = Some(i),
            None => {}
        }
    }
    last.map_or(CellValue::Error(ErrorKind::Na), position)
}

fn position(i: usize) -> CellValue {
    CellValue::Number((i + 1) as f64)
}

/// Validates a 1-based INDEX position against a run of `len` cells.
pub fn index_position(len: usize, idx: &CellValue) -> Result<usize, ErrorKind> {
    let x = to_number(idx)?.trunc();
    if x < 1.0 || x > len as f64 {
        return Err(ErrorKind::Value);
    }
    Ok(x as usize - 1)
}

pub fn eval_index(range: &dyn CellSeq, idx: &CellValue) -> CellValue {
    match index_position(range.len(), idx) {
        Ok(i) => range.at(i).clone(),
        Err(k) => CellValue::Error(k),
    }
}

/// INDEX applied to a plain value: only position 1 exists.
pub fn eval_index_scalar(value: &CellValue, idx: &CellValue) -> CellValue {
    if let CellValue::Error(k) = idx {
        return CellValue::Error(*k);
    }
    match index_position(1, idx) {
        Ok(_) => value.clone(),
        Err(k) => CellValue::Error(k),
    }
}

fn matching_positions<'a>(
    pairs: &'a [(&'a dyn CellSeq, Criterion)],
) -> Result<impl Iterator<Item = usize> + 'a, ErrorKind> {
    let len = pairs.first().map_or(0, |(r, _)| r.len());
    if pairs.iter().any(|(r, _)| r.len() != len) {
        return Err(ErrorKind::Value);
    }
    Ok((0..len).filter(move |&i| pairs.iter().all(|(r, c)| c.matches(r.at(i)))))
}

pub fn eval_countifs(pairs: &[(&dyn CellSeq, Criterion)]) -> CellValue {
    match matching_positions(pairs) {
        Ok(it) => CellValue::Number(it.count() as f64),
        Err(k) => CellValue::Error(k),
    }
}

/// SUMIFS. Text, blank and boolean cells at matched positions add nothing;
/// an error at a matched position becomes the result.
pub fn eval_sumifs(sum_range: &dyn CellSeq, pairs: &[(&dyn CellSeq, Criterion)]) -> CellValue {
    if pairs.iter().any(|(r, _)| r.len() != sum_range.len()) {
        return CellValue::Error(ErrorKind::Value);
    }
    let positions = match matching_positions(pairs) {
        Ok(it) => it,
        Err(k) => return CellValue::Error(k),
    };
    let mut total = 0.0;
    for i in positions {
        match sum_range.at(i) {
            CellValue::Number(x) => total += x,
            CellValue::Error(k) => return CellValue::Error(*k),
            _ => {}
        }
    }
    CellValue::number(total)
}

pub fn counta(range: &dyn CellSeq) -> usize {
    (0..range.len()).filter(|&i| !matches!(range.at(i), CellValue::Blank)).count()
}

/// Accumulates numbers for SUM/MIN/MAX. Range cells that are not numbers are
/// skipped; an error anywhere in the range is returned.
pub fn fold_numbers(range: &dyn CellSeq, acc: &mut Vec<f64>) -> Result<(), ErrorKind> {
    for i in 0..range.len() {
        match range.at(i) {
            CellValue::Number(x) => acc.push(*x),
            CellValue::Error(k) => return Err(*k),
            _ => {}
        }
    }
    Ok(())
}

/// MOD with the sign of the divisor.
pub fn modulo(a: f64, b: f64) -> CellValue {
    if b == 0.0 {
        return CellValue::Error(ErrorKind::Div0);
    }
    CellValue::number(a - b * (a / b).floor())
}

/// QUOTIENT truncates toward zero.
pub fn quotient(a: f64, b: f64) -> CellValue {
    if b == 0.0 {
        return CellValue::Error(ErrorKind::Div0);
    }
    CellValue::number((a / b).trunc())
}

pub fn power(a: f64, b: f64) -> CellValue {
    if a == 0.0 && b < 0.0 {
        return CellValue::Error(ErrorKind::Div0);
    }
    CellValue::number(a.powf(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nums(xs: &[f64]) -> Vec<CellValue> {
        xs.iter().map(|x| CellValue::Number(*x)).collect()
    }

    fn text(xs: &[&str]) -> Vec<CellValue> {
        xs.iter().map(|x| CellValue::text(*x)).collect()
    }

    fn na() -> CellValue {
        CellValue::Error(ErrorKind::Na)
    }

    /// Brute-force reading of "largest value that is less than or equal to".
    fn match_le_oracle(lookup: f64, xs: &[f64]) -> Option<usize> {
        let best = xs.iter().copied().filter(|x| *x <= lookup).fold(f64::NEG_INFINITY, f64::max);
        xs.iter().rposition(|x| *x == best).map(|i| i + 1)
    }

    #[test]
    fn match_exact_first_occurrence() {
        assert_eq!(eval_match(&CellValue::Number(3.0), &nums(&[5.0, 3.0, 3.0, 9.0]), 0), CellValue::Number(2.0));
        assert_eq!(eval_match(&CellValue::text("z"), &text(&["a", "b"]), 0), na());
        assert_eq!(eval_match(&CellValue::text("B"), &text(&["a", "b"]), 0), CellValue::Number(2.0));
    }

    #[test]
    fn match_ascending() {
        let xs = [0.0, 2.0, 3.0, 7.0];
        let got = eval_match(&CellValue::Number(4.0), &nums(&xs), 1);
        assert_eq!(got, CellValue::Number(match_le_oracle(4.0, &xs).unwrap() as f64));
        assert_eq!(got, CellValue::Number(3.0));
        assert_eq!(eval_match(&CellValue::Number(-1.0), &nums(&xs), 1), na());
        for lookup in [0.0, 1.5, 2.0, 6.9, 7.0, 100.0] {
            let want = match_le_oracle(lookup, &xs).map_or(na(), |p| CellValue::Number(p as f64));
            assert_eq!(eval_match(&CellValue::Number(lookup), &nums(&xs), 1), want);
        }
    }

    #[test]
    fn match_ascending_with_na_tail() {
        let mut col = nums(&[0.0, 2.0, 2.0, 5.0]);
        col.push(na());
        col.push(CellValue::Blank);
        assert_eq!(eval_match(&CellValue::Number(3.0), &col, 1), CellValue::Number(3.0));
        assert_eq!(eval_match(&CellValue::Number(9.0), &col, 1), CellValue::Number(4.0));
    }

    #[test]
    fn match_na_lookup_finds_na_cells() {
        let col = vec![CellValue::Number(1.0), CellValue::Error(ErrorKind::Value), na()];
        assert_eq!(eval_match(&na(), &col, 0), CellValue::Number(3.0));
        assert_eq!(
            eval_match(&CellValue::Error(ErrorKind::Value), &col, 0),
            CellValue::Error(ErrorKind::Value)
        );
    }

    #[test]
    fn index_bounds() {
        let xs = nums(&[10.0, 20.0, 30.0]);
        assert_eq!(eval_index(&xs, &CellValue::Number(2.0)), CellValue::Number(20.0));
        assert_eq!(eval_index(&xs, &CellValue::Number(4.0)), CellValue::Error(ErrorKind::Value));
        assert_eq!(eval_index(&xs, &CellValue::Number(0.0)), CellValue::Error(ErrorKind::Value));
        assert_eq!(eval_index(&nums(&[10.0]), &na()), na());
        assert_eq!(
            eval_index_scalar(&CellValue::Number(0.0), &CellValue::Number(-1.0)),
            CellValue::Error(ErrorKind::Value)
        );
        assert_eq!(eval_index_scalar(&CellValue::Number(7.0), &CellValue::Number(1.0)), CellValue::Number(7.0));
    }

    #[test]
    fn countifs_cases() {
        // the five-row worksheet: numbers 1..5 against letters
        let c1 = nums(&[1.0, 2.0, 3.0, 1.0, 2.0]);
        let c2 = text(&["a", "a", "a", "b", "b"]);
        let lt3 = Criterion::parse(&CellValue::text("<3"));
        let is_a = Criterion::parse(&CellValue::text("a"));
        assert_eq!(eval_countifs(&[(&c1, lt3), (&c2, is_a)]), CellValue::Number(2.0));

        let col = vec![na(), CellValue::Number(1.0), na()];
        let oracle = col.iter().filter(|v| v.is_na()).count() as f64;
        assert_eq!(eval_countifs(&[(&col, Criterion::parse(&na()))]), CellValue::Number(oracle));
        assert_eq!(
            eval_countifs(&[(&col, Criterion::parse(&CellValue::text("zzz")))]),
            CellValue::Number(0.0)
        );
        let short = nums(&[1.0]);
        assert_eq!(
            eval_countifs(&[
                (&col, Criterion::parse(&na())),
                (&short, Criterion::parse(&CellValue::Number(1.0)))
            ]),
            CellValue::Error(ErrorKind::Value)
        );
    }

    #[test]
    fn sumifs_cases() {
        let keys = text(&["a", "b", "a"]);
        let is_a = Criterion::parse(&CellValue::text("a"));
        assert_eq!(eval_sumifs(&nums(&[1.0, 2.0, 3.0]), &[(&keys, is_a)]), CellValue::Number(4.0));
        let xs = text(&["x", "x"]);
        let is_x = Criterion::parse(&CellValue::text("x"));
        let vals = vec![CellValue::text(""), CellValue::Number(5.0)];
        assert_eq!(eval_sumifs(&vals, &[(&xs, is_x.clone())]), CellValue::Number(5.0));
        let vals = vec![CellValue::Error(ErrorKind::Value), CellValue::Number(5.0)];
        assert_eq!(eval_sumifs(&vals, &[(&xs, is_x)]), CellValue::Error(ErrorKind::Value));
    }

    #[test]
    fn counta_counts_errors() {
        let xs = vec![CellValue::Number(7.0), CellValue::text("x"), na(), CellValue::Blank];
        let oracle = xs.iter().filter(|v| **v != CellValue::Blank).count();
        assert_eq!(counta(&xs), oracle);
        assert_eq!(counta(&xs), 3);
    }

    #[test]
    fn mod_and_quotient_match_definitions() {
        for a in -7..=7 {
            for b in [-3, -2, 2, 3] {
                let (af, bf) = (f64::from(a), f64::from(b));
                let m = modulo(af, bf).as_number().unwrap();
                // sign follows divisor, and a = b*q + m for integer q
                assert!(m == 0.0 || m.signum() == bf.signum());
                assert!(m.abs() < bf.abs());
                assert_eq!(((af - m) / bf).fract(), 0.0);
                let q = quotient(af, bf).as_number().unwrap();
                assert_eq!(q, f64::from(a / b));
            }
        }
        assert_eq!(modulo(-1.0, 3.0), CellValue::Number(2.0));
        assert_eq!(quotient(7.0, 2.0), CellValue::Number(3.0));
        assert_eq!(modulo(1.0, 0.0), CellValue::Error(ErrorKind::Div0));
        assert_eq!(power(2.0, 10.0), CellValue::Number(1024.0));
        assert_eq!(power(-8.0, 0.5), CellValue::Error(ErrorKind::Num));
    }
}
