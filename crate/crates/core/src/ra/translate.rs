use std::collections::HashMap;

use crate::sql::{
    AggFunc, Binding, ColumnRef, FromItem, OrderKey, Query, QueryBody, Select, SelectItem, SetOp, SqlExpr,
    SqlPredicate, TableSchema,
};

use super::*;

/// Translates a resolved query into set-semantics relational algebra.
///
/// The result is purely logical: no `DeDup`/`Standardize` nodes are added.
pub fn translate(q: &Query, schemas: &[TableSchema]) -> Result<RAExpr, RaError> {
    let mut e = body(&q.body, schemas)?;
    for item in q.order_by.iter().rev() {
        let out = item
            .output
            .ok_or_else(|| RaError::Unsupported("unresolved ORDER BY key".into()))?;
        let dir = if item.descending { Direction::Desc } else { Direction::Asc };
        e = RAExpr::Sort(Box::new(e), out + 1, dir);
    }
    if let Some(item) = q.order_by.iter().find(|o| matches!(o.key, OrderKey::Column(_)) && o.output.is_none()) {
        return Err(RaError::Unsupported(format!("ORDER BY {:?}", item.key)));
    }
    e.arity()?;
    Ok(e)
}

fn body(b: &QueryBody, schemas: &[TableSchema]) -> Result<RAExpr, RaError> {
    match b {
        QueryBody::Select(sel) => select(sel, schemas),
        QueryBody::SetOp { op, left, right } => {
            let l = Box::new(body(left, schemas)?);
            let r = Box::new(body(right, schemas)?);
            Ok(match op {
                SetOp::Union => RAExpr::UnionSet(l, r),
                SetOp::Except => RAExpr::DiffSet(l, r),
                SetOp::Intersect => RAExpr::IntersectSet(l, r),
            })
        }
    }
}

/// Position of each (FROM item, ordinal) in the accumulated relation.
struct Layout {
    pos: HashMap<(usize, usize), usize>,
    arity: usize,
}

impl Layout {
    fn col(&self, c: &ColumnRef) -> Result<usize, RaError> {
        let b = binding(c)?;
        self.pos
            .get(&(b.source, b.ordinal))
            .copied()
            .ok_or_else(|| RaError::Unsupported(format!("column {} is not in scope", c.name)))
    }
}

fn binding(c: &ColumnRef) -> Result<&Binding, RaError> {
    c.binding
        .as_ref()
        .ok_or_else(|| RaError::Unsupported(format!("unresolved column {}", c.name)))
}

fn schema<'a>(schemas: &'a [TableSchema], item: &FromItem) -> Result<&'a TableSchema, RaError> {
    schemas
        .iter()
        .find(|s| s.name.eq_ignore_ascii_case(&item.table))
        .ok_or_else(|| RaError::UnknownTable(item.table.clone()))
}

fn conjuncts(p: &SqlPredicate, out: &mut Vec<SqlPredicate>) {
    match p {
        SqlPredicate::And(l, r) => {
            conjuncts(l, out);
            conjuncts(r, out);
        }
        SqlPredicate::Literal(true) => {}
        other => out.push(other.clone()),
    }
}

fn column_source(e: &SqlExpr) -> Option<&Binding> {
    match e {
        SqlExpr::Column(c) => c.binding.as_ref(),
        _ => None,
    }
}

fn select(sel: &Select, schemas: &[TableSchema]) -> Result<RAExpr, RaError> {
    let mut preds = Vec::new();
    for f in &sel.from {
        if let Some(p) = &f.join_on {
            conjuncts(p, &mut preds);
        }
    }
    if let Some(p) = &sel.where_clause {
        conjuncts(p, &mut preds);
    }

    // FROM: equality conjuncts linking a new item to the accumulated ones become joins
    let first = schema(schemas, &sel.from[0])?;
    let mut acc = RAExpr::reference(&first.name, first.arity());
    let mut layout = Layout {
        pos: (1..=first.arity()).map(|o| ((0, o), o)).collect(),
        arity: first.arity(),
    };
    for (k, item) in sel.from.iter().enumerate().skip(1) {
        let s = schema(schemas, item)?;
        let right = RAExpr::reference(&s.name, s.arity());
        let link = preds.iter().position(|p| match p {
            SqlPredicate::Compare(crate::sql::CmpOp::Eq, a, b) => {
                match (column_source(a), column_source(b)) {
                    (Some(x), Some(y)) => (x.source == k && y.source < k) || (y.source == k && x.source < k),
                    _ => false,
                }
            }
            _ => false,
        });
        match link {
            Some(i) => {
                let SqlPredicate::Compare(_, a, b) = preds.remove(i) else { unreachable!() };
                let (old, new) = match (&a, &b) {
                    (SqlExpr::Column(x), SqlExpr::Column(y)) if binding(x)?.source == k => (y.clone(), x.clone()),
                    (SqlExpr::Column(x), SqlExpr::Column(y)) => (x.clone(), y.clone()),
                    _ => unreachable!(),
                };
                let lk = layout.col(&old)?;
                let rk = binding(&new)?.ordinal;
                let mut pos = HashMap::new();
                for (&key, &p) in &layout.pos {
                    let np = match p.cmp(&lk) {
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => p + 1,
                        std::cmp::Ordering::Greater => p,
                    };
                    pos.insert(key, np);
                }
                for o in 1..=s.arity() {
                    let np = match o.cmp(&rk) {
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => layout.arity + o,
                        std::cmp::Ordering::Greater => layout.arity + o - 1,
                    };
                    pos.insert((k, o), np);
                }
                acc = RAExpr::EqJoin(Box::new(acc), Box::new(right), lk, rk);
                layout = Layout {
                    pos,
                    arity: layout.arity + s.arity() - 1,
                };
            }
            None => {
                for o in 1..=s.arity() {
                    layout.pos.insert((k, o), layout.arity + o);
                }
                layout.arity += s.arity();
                acc = RAExpr::Product(Box::new(acc), Box::new(right));
            }
        }
    }

    // WHERE: positive IN over a column becomes a semijoin, the rest one selection
    let mut rest: Option<Predicate> = None;
    for p in preds {
        if let SqlPredicate::InSubquery {
            expr: SqlExpr::Column(c),
            query,
            negated: false,
        } = &p
        {
            let sub = translate(query, schemas)?;
            acc = RAExpr::Semijoin(Box::new(acc), Box::new(sub), layout.col(c)?, 1);
            continue;
        }
        let q = predicate(&p, &layout, schemas)?;
        rest = Some(match rest {
            None => q,
            Some(r) => Predicate::And(Box::new(r), Box::new(q)),
        });
    }
    if let Some(p) = rest {
        acc = RAExpr::Select(Box::new(acc), p);
    }

    let aggregated = sel
        .items
        .iter()
        .any(|i| matches!(i, SelectItem::Expr { expr, .. } if expr.contains_aggregate()));
    if aggregated || !sel.group_by.is_empty() {
        return grouped(sel, acc, &layout);
    }

    // plain projection, with computed columns appended first
    let mut cols = Vec::new();
    let mut computed = Vec::new();
    for item in &sel.items {
        match item {
            SelectItem::Wildcard => {
                for (k, f) in sel.from.iter().enumerate() {
                    let s = schema(schemas, f)?;
                    for o in 1..=s.arity() {
                        cols.push(layout.pos[&(k, o)]);
                    }
                }
            }
            SelectItem::QualifiedWildcard(q) => {
                let k = sel
                    .from
                    .iter()
                    .position(|f| f.name() == q)
                    .ok_or_else(|| RaError::UnknownTable(q.clone()))?;
                for o in 1..=schema(schemas, &sel.from[k])?.arity() {
                    cols.push(layout.pos[&(k, o)]);
                }
            }
            SelectItem::Expr { expr: SqlExpr::Column(c), .. } => cols.push(layout.col(c)?),
            SelectItem::Expr { expr, .. } => {
                computed.push(scalar(expr, &|c| layout.col(c))?);
                cols.push(layout.arity + computed.len());
            }
        }
    }
    if !computed.is_empty() {
        acc = RAExpr::Extend(Box::new(acc), computed);
    }
    Ok(project(acc, cols, layout.arity))
}

fn project(acc: RAExpr, cols: Vec<usize>, arity: usize) -> RAExpr {
    if cols.len() == arity && cols.iter().enumerate().all(|(i, &c)| c == i + 1) {
        acc
    } else {
        RAExpr::Project(Box::new(acc), cols)
    }
}

fn grouped(sel: &Select, acc: RAExpr, layout: &Layout) -> Result<RAExpr, RaError> {
    let groups: Vec<usize> = sel.group_by.iter().map(|c| layout.col(c)).collect::<Result<_, _>>()?;
    let group_bindings: Vec<&Binding> = sel.group_by.iter().map(binding).collect::<Result<_, _>>()?;
    let mut aggs: Vec<Aggregate> = Vec::new();

    for item in &sel.items {
        if let SelectItem::Expr { expr, .. } = item {
            collect(expr, layout, &mut aggs)?;
        }
    }
    let arity = groups.len() + aggs.len();
    let mut acc = RAExpr::GroupAgg(Box::new(acc), groups.clone(), aggs.clone());

    // position of a group column or aggregate in the GroupAgg output
    let group_pos = |c: &ColumnRef| -> Result<usize, RaError> {
        let b = binding(c)?;
        group_bindings
            .iter()
            .position(|g| *g == b)
            .map(|i| i + 1)
            .ok_or_else(|| RaError::Unsupported(format!("column {} is not grouped", c.name)))
    };
    let mut cols = Vec::new();
    let mut computed = Vec::new();
    for item in &sel.items {
        let SelectItem::Expr { expr, .. } = item else {
            return Err(RaError::Unsupported("'*' with aggregation".into()));
        };
        match expr {
            SqlExpr::Column(c) => cols.push(group_pos(c)?),
            SqlExpr::Aggregate { .. } => {
                let a = aggregate_of(expr, layout)?;
                cols.push(groups.len() + 1 + aggs.iter().position(|x| *x == a).expect("collected"));
            }
            _ => {
                computed.push(grouped_scalar(expr, &group_pos, layout, &aggs, groups.len())?);
                cols.push(arity + computed.len());
            }
        }
    }
    if !computed.is_empty() {
        acc = RAExpr::Extend(Box::new(acc), computed);
    }
    Ok(project(acc, cols, arity))
}

fn aggregate_of(e: &SqlExpr, layout: &Layout) -> Result<Aggregate, RaError> {
    let SqlExpr::Aggregate { func, distinct, arg } = e else {
        unreachable!("not an aggregate")
    };
    let cols = match arg.as_deref() {
        None => vec![],
        Some(SqlExpr::Column(c)) => vec![layout.col(c)?],
        Some(_) => return Err(RaError::Unsupported("aggregate over an expression".into())),
    };
    let op = match (func, distinct) {
        (AggFunc::Count, false) => AggOp::Count,
        (AggFunc::Count, true) => AggOp::CountDistinct,
        (AggFunc::Sum, false) => AggOp::Sum,
        (AggFunc::Avg, false) => AggOp::Avg,
        (AggFunc::Min, _) => AggOp::Min,
        (AggFunc::Max, _) => AggOp::Max,
        (f, true) => return Err(RaError::Unsupported(format!("{}(DISTINCT ...)", f.name()))),
    };
    Ok(Aggregate { op, cols })
}

fn collect(e: &SqlExpr, layout: &Layout, aggs: &mut Vec<Aggregate>) -> Result<(), RaError> {
    match e {
        SqlExpr::Aggregate { .. } => {
            let a = aggregate_of(e, layout)?;
            if !aggs.contains(&a) {
                aggs.push(a);
            }
            Ok(())
        }
        SqlExpr::Neg(x) => collect(x, layout, aggs),
        SqlExpr::Binary(_, l, r) => {
            collect(l, layout, aggs)?;
            collect(r, layout, aggs)
        }
        _ => Ok(()),
    }
}

fn grouped_scalar(
    e: &SqlExpr,
    group_pos: &dyn Fn(&ColumnRef) -> Result<usize, RaError>,
    layout: &Layout,
    aggs: &[Aggregate],
    ngroups: usize,
) -> Result<ScalarExpr, RaError> {
    Ok(match e {
        SqlExpr::Column(c) => ScalarExpr::Column(group_pos(c)?),
        SqlExpr::Aggregate { .. } => {
            let a = aggregate_of(e, layout)?;
            ScalarExpr::Column(ngroups + 1 + aggs.iter().position(|x| *x == a).expect("collected"))
        }
        SqlExpr::Neg(x) => ScalarExpr::Neg(Box::new(grouped_scalar(x, group_pos, layout, aggs, ngroups)?)),
        SqlExpr::Binary(op, l, r) => ScalarExpr::Arith(
            *op,
            Box::new(grouped_scalar(l, group_pos, layout, aggs, ngroups)?),
            Box::new(grouped_scalar(r, group_pos, layout, aggs, ngroups)?),
        ),
        other => scalar(other, &|_| unreachable!("literal"))?,
    })
}

fn scalar(e: &SqlExpr, col: &dyn Fn(&ColumnRef) -> Result<usize, RaError>) -> Result<ScalarExpr, RaError> {
    Ok(match e {
        SqlExpr::Column(c) => ScalarExpr::Column(col(c)?),
        SqlExpr::Number(x) => ScalarExpr::Literal(Datum::number(*x)),
        SqlExpr::Text(s) => ScalarExpr::Literal(Datum::Text(s.clone())),
        SqlExpr::Boolean(b) => ScalarExpr::Literal(Datum::Bool(*b)),
        SqlExpr::Neg(x) => ScalarExpr::Neg(Box::new(scalar(x, col)?)),
        SqlExpr::Binary(op, l, r) => ScalarExpr::Arith(*op, Box::new(scalar(l, col)?), Box::new(scalar(r, col)?)),
        SqlExpr::Aggregate { .. } => return Err(RaError::Unsupported("aggregate outside a grouped select".into())),
    })
}

fn predicate(p: &SqlPredicate, layout: &Layout, schemas: &[TableSchema]) -> Result<Predicate, RaError> {
    let col = |c: &ColumnRef| layout.col(c);
    Ok(match p {
        SqlPredicate::Literal(b) => Predicate::Const(*b),
        SqlPredicate::Compare(op, l, r) => Predicate::Compare(*op, scalar(l, &col)?, scalar(r, &col)?),
        SqlPredicate::And(l, r) => Predicate::And(
            Box::new(predicate(l, layout, schemas)?),
            Box::new(predicate(r, layout, schemas)?),
        ),
        SqlPredicate::Or(l, r) => Predicate::Or(
            Box::new(predicate(l, layout, schemas)?),
            Box::new(predicate(r, layout, schemas)?),
        ),
        SqlPredicate::Not(x) => Predicate::Not(Box::new(predicate(x, layout, schemas)?)),
        SqlPredicate::IsNull { expr, negated } => {
            let t = Predicate::IsNull(scalar(expr, &col)?);
            if *negated {
                Predicate::Not(Box::new(t))
            } else {
                t
            }
        }
        SqlPredicate::InSubquery { expr, query, negated } => Predicate::In {
            expr: scalar(expr, &col)?,
            rel: Box::new(translate(query, schemas)?),
            negated: *negated,
        },
        SqlPredicate::Exists { query, negated } => Predicate::Exists {
            rel: Box::new(translate(query, schemas)?),
            negated: *negated,
        },
    })
}
