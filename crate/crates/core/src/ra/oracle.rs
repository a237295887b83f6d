use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::eval::to_number;

use super::*;

/// Input tables by name.
pub type Database = BTreeMap<String, Relation>;

/// Three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn and(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    fn or(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

/// Evaluates an expression over a database under set semantics.
pub fn oracle_eval(e: &RAExpr, db: &Database) -> Result<Relation, RaError> {
    e.arity()?;
    let mut cache = HashMap::new();
    eval(e, db, &mut cache)
}

type Cache = HashMap<*const RAExpr, Relation>;

fn eval(e: &RAExpr, db: &Database, cache: &mut Cache) -> Result<Relation, RaError> {
    let arity = e.arity()?;
    let rows: Vec<Tuple> = match e {
        RAExpr::Reference { table, arity } => {
            let rel = db.get(table).ok_or_else(|| RaError::UnknownTable(table.clone()))?;
            if rel.arity != *arity || rel.rows.iter().any(|r| r.len() != *arity) {
                return Err(RaError::Arity {
                    table: table.clone(),
                    expected: *arity,
                    actual: rel.arity,
                });
            }
            rel.rows.clone()
        }
        RAExpr::Project(c, cols) => {
            let r = eval(c, db, cache)?;
            r.rows.iter().map(|t| cols.iter().map(|&o| t[o - 1].clone()).collect()).collect()
        }
        RAExpr::Extend(c, exprs) => {
            let r = eval(c, db, cache)?;
            r.rows
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    let extra: Vec<Datum> = exprs.iter().map(|x| eval_scalar(x, &t)).collect();
                    t.extend(extra);
                    t
                })
                .collect()
        }
        RAExpr::Select(c, p) => {
            let r = eval(c, db, cache)?;
            let mut keep = Vec::new();
            for t in r.rows {
                if eval_pred(p, &t, db, cache)? == Truth::True {
                    keep.push(t);
                }
            }
            keep
        }
        RAExpr::EqJoin(l, r, lo, ro) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            let mut out = Vec::new();
            for a in &l.rows {
                for b in &r.rows {
                    if a[lo - 1].sql_cmp(&b[ro - 1]) == Some(Ordering::Equal) {
                        let mut t = vec![a[lo - 1].clone()];
                        t.extend(a.iter().enumerate().filter(|(i, _)| i + 1 != *lo).map(|(_, d)| d.clone()));
                        t.extend(b.iter().enumerate().filter(|(i, _)| i + 1 != *ro).map(|(_, d)| d.clone()));
                        out.push(t);
                    }
                }
            }
            out
        }
        RAExpr::Semijoin(l, r, lo, ro) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            l.rows
                .into_iter()
                .filter(|a| r.rows.iter().any(|b| a[lo - 1].sql_cmp(&b[ro - 1]) == Some(Ordering::Equal)))
                .collect()
        }
        RAExpr::Product(l, r) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            let mut out = Vec::new();
            for a in &l.rows {
                for b in &r.rows {
                    let mut t = a.clone();
                    t.extend(b.iter().cloned());
                    out.push(t);
                }
            }
            out
        }
        RAExpr::UnionSet(l, r) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            l.rows.into_iter().chain(r.rows).collect()
        }
        RAExpr::DiffSet(l, r) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            l.rows.into_iter().filter(|t| !r.contains(t)).collect()
        }
        RAExpr::IntersectSet(l, r) => {
            let (l, r) = (eval(l, db, cache)?, eval(r, db, cache)?);
            l.rows.into_iter().filter(|t| r.contains(t)).collect()
        }
        RAExpr::DeDup(c) | RAExpr::Standardize(c) | RAExpr::ErrorTrap(c) => eval(c, db, cache)?.rows,
        RAExpr::Sort(c, k, dir) => {
            let mut rows = eval(c, db, cache)?.rows;
            rows.sort_by(|a, b| sort_order(&a[k - 1], &b[k - 1], *dir));
            rows
        }
        RAExpr::GroupAgg(c, groups, aggs) => group_agg(&eval(c, db, cache)?, groups, aggs),
    };
    Ok(Relation::from_rows(arity, rows))
}

/// Sort key order: Nulls last in both directions.
pub(crate) fn sort_order(a: &Datum, b: &Datum, dir: Direction) -> Ordering {
    match (a.is_null(), b.is_null()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => {
            let o = a.sql_cmp(b).expect("non-null");
            if dir == Direction::Desc {
                o.reverse()
            } else {
                o
            }
        }
    }
}

fn group_agg(r: &Relation, groups: &[usize], aggs: &[Aggregate]) -> Vec<Tuple> {
    let mut order: Vec<Tuple> = Vec::new();
    let mut members: HashMap<Tuple, Vec<&Tuple>> = HashMap::new();
    for t in &r.rows {
        let key: Tuple = groups.iter().map(|&g| t[g - 1].clone()).collect();
        let entry = members.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(t);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &members[&key];
            let mut out = key;
            out.extend(aggs.iter().map(|a| aggregate(a, rows)));
            out
        })
        .collect()
}

fn aggregate(a: &Aggregate, rows: &[&Tuple]) -> Datum {
    let values = || rows.iter().map(|t| &t[a.cols[0] - 1]).filter(|d| !d.is_null());
    let sum = || -> (f64, usize) {
        let mut s = 0.0;
        let mut n = 0;
        for d in values() {
            if let Datum::Number(x) = d {
                s += x;
            }
            n += 1;
        }
        (s, n)
    };
    match a.op {
        AggOp::Count if a.cols.is_empty() => Datum::Number(rows.len() as f64),
        AggOp::Count => {
            let n = rows
                .iter()
                .filter(|t| a.cols.iter().any(|&c| !t[c - 1].is_null()))
                .count();
            Datum::Number(n as f64)
        }
        AggOp::CountDistinct => {
            let mut seen: Vec<Tuple> = Vec::new();
            for t in rows {
                let sub: Tuple = a.cols.iter().map(|&c| t[c - 1].clone()).collect();
                if sub.iter().all(Datum::is_null) || seen.contains(&sub) {
                    continue;
                }
                seen.push(sub);
            }
            Datum::Number(seen.len() as f64)
        }
        AggOp::Sum => match sum() {
            (_, 0) => Datum::Null,
            (s, _) => Datum::number(s),
        },
        AggOp::Avg => match sum() {
            (_, 0) => Datum::Null,
            (s, n) => Datum::number(s / n as f64),
        },
        AggOp::Min | AggOp::Max => {
            let mut best: Option<&Datum> = None;
            for d in values() {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let o = d.sql_cmp(b).expect("non-null");
                        if a.op == AggOp::Min {
                            o == Ordering::Less
                        } else {
                            o == Ordering::Greater
                        }
                    }
                };
                if better {
                    best = Some(d);
                }
            }
            best.cloned().unwrap_or(Datum::Null)
        }
    }
}

/// Arithmetic with spreadsheet coercions; failures are Null.
pub fn eval_scalar(e: &ScalarExpr, t: &Tuple) -> Datum {
    match e {
        ScalarExpr::Column(c) => t[c - 1].clone(),
        ScalarExpr::Literal(d) => d.clone(),
        ScalarExpr::Neg(x) => match numeric(&eval_scalar(x, t)) {
            Some(v) => Datum::number(-v),
            None => Datum::Null,
        },
        ScalarExpr::Arith(op, l, r) => {
            let (Some(a), Some(b)) = (numeric(&eval_scalar(l, t)), numeric(&eval_scalar(r, t))) else {
                return Datum::Null;
            };
            match op {
                ArithOp::Add => Datum::number(a + b),
                ArithOp::Sub => Datum::number(a - b),
                ArithOp::Mul => Datum::number(a * b),
                ArithOp::Div if b == 0.0 => Datum::Null,
                ArithOp::Div => Datum::number(a / b),
            }
        }
    }
}

fn numeric(d: &Datum) -> Option<f64> {
    to_number(&d.to_cell()?).ok()
}

/// Evaluates a predicate on one tuple.
pub fn eval_predicate(p: &Predicate, t: &Tuple, db: &Database) -> Result<Truth, RaError> {
    eval_pred(p, t, db, &mut HashMap::new())
}

fn eval_pred(p: &Predicate, t: &Tuple, db: &Database, cache: &mut Cache) -> Result<Truth, RaError> {
    Ok(match p {
        Predicate::Const(true) => Truth::True,
        Predicate::Const(false) => Truth::False,
        Predicate::Compare(op, l, r) => {
            let (a, b) = (eval_scalar(l, t), eval_scalar(r, t));
            match a.sql_cmp(&b) {
                None => Truth::Unknown,
                Some(o) => {
                    let v = match op {
                        CmpOp::Eq => o == Ordering::Equal,
                        CmpOp::Ne => o != Ordering::Equal,
                        CmpOp::Lt => o == Ordering::Less,
                        CmpOp::Le => o != Ordering::Greater,
                        CmpOp::Gt => o == Ordering::Greater,
                        CmpOp::Ge => o != Ordering::Less,
                    };
                    if v {
                        Truth::True
                    } else {
                        Truth::False
                    }
                }
            }
        }
        Predicate::IsNull(e) => {
            if eval_scalar(e, t).is_null() {
                Truth::True
            } else {
                Truth::False
            }
        }
        Predicate::And(l, r) => eval_pred(l, t, db, cache)?.and(eval_pred(r, t, db, cache)?),
        Predicate::Or(l, r) => eval_pred(l, t, db, cache)?.or(eval_pred(r, t, db, cache)?),
        Predicate::Not(x) => eval_pred(x, t, db, cache)?.not(),
        Predicate::In { expr, rel, negated } => {
            let s = subquery(rel, db, cache)?;
            let x = eval_scalar(expr, t);
            let v = if s.is_empty() {
                Truth::False
            } else if x.is_null() {
                Truth::Unknown
            } else if s.rows.iter().any(|r| x.sql_cmp(&r[0]) == Some(Ordering::Equal)) {
                Truth::True
            } else if s.rows.iter().any(|r| r[0].is_null()) {
                Truth::Unknown
            } else {
                Truth::False
            };
            if *negated {
                v.not()
            } else {
                v
            }
        }
        Predicate::Exists { rel, negated } => {
            let nonempty = !subquery(rel, db, cache)?.is_empty();
            if nonempty != *negated {
                Truth::True
            } else {
                Truth::False
            }
        }
    })
}

fn subquery(rel: &RAExpr, db: &Database, cache: &mut Cache) -> Result<Relation, RaError> {
    let key = rel as *const RAExpr;
    if let Some(r) = cache.get(&key) {
        return Ok(r.clone());
    }
    let r = eval(rel, db, cache)?;
    cache.insert(key, r.clone());
    Ok(r)
}
