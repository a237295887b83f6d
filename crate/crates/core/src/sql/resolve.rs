use super::ast::*;
use super::SqlError;

/// One FROM item visible in a scope.
struct Source<'a> {
    name: String,
    schema: &'a TableSchema,
}

type Scope<'a> = Vec<Source<'a>>;

pub(crate) fn resolve_query(q: &mut Query, schemas: &[TableSchema]) -> Result<(), SqlError> {
    resolve_in(q, schemas, &[]).map(|_| ())
}

fn resolve_in(q: &mut Query, schemas: &[TableSchema], outer: &[&Scope<'_>]) -> Result<usize, SqlError> {
    let arity = resolve_body(&mut q.body, schemas, outer)?;
    let names = output_names(&q.body, schemas);
    for item in &mut q.order_by {
        let out = match &mut item.key {
            OrderKey::Position(p) => {
                if *p == 0 || *p > arity {
                    return Err(SqlError::Invalid(format!("ORDER BY position {p} is out of range")));
                }
                *p - 1
            }
            OrderKey::Column(c) => order_column(c, &q.body, &names, schemas, outer)?,
        };
        item.output = Some(out);
    }
    Ok(arity)
}

fn order_column(
    c: &mut ColumnRef,
    body: &QueryBody,
    names: &[Option<String>],
    schemas: &[TableSchema],
    outer: &[&Scope<'_>],
) -> Result<usize, SqlError> {
    if c.qualifier.is_none() {
        let hits: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.as_deref() == Some(c.name.as_str()))
            .map(|(i, _)| i)
            .collect();
        match hits.len() {
            1 => return Ok(hits[0]),
            0 => {}
            _ => return Err(SqlError::AmbiguousColumn(c.name.clone())),
        }
    }
    let QueryBody::Select(sel) = body else {
        return Err(SqlError::UnknownColumn(display_ref(c)));
    };
    let scope = build_scope(sel, schemas)?;
    let binding = lookup(c, &scope, outer)?;
    let mut pos = 0;
    for item in &sel.items {
        match item {
            SelectItem::Wildcard => {
                for (s, src) in scope.iter().enumerate() {
                    if s == binding.source {
                        return Ok(pos + binding.ordinal - 1);
                    }
                    pos += src.schema.arity();
                }
            }
            SelectItem::QualifiedWildcard(q) => {
                let s = scope.iter().position(|src| &src.name == q).expect("resolved");
                if s == binding.source {
                    return Ok(pos + binding.ordinal - 1);
                }
                pos += scope[s].schema.arity();
            }
            SelectItem::Expr { expr, .. } => {
                if let SqlExpr::Column(col) = expr {
                    if col.binding.as_ref() == Some(&binding) {
                        return Ok(pos);
                    }
                }
                pos += 1;
            }
        }
    }
    Err(SqlError::Invalid(format!(
        "ORDER BY column {} must appear in the select list",
        display_ref(c)
    )))
}

fn resolve_body(body: &mut QueryBody, schemas: &[TableSchema], outer: &[&Scope<'_>]) -> Result<usize, SqlError> {
    match body {
        QueryBody::Select(sel) => resolve_select(sel, schemas, outer),
        QueryBody::SetOp { op, left, right } => {
            let l = resolve_body(left, schemas, outer)?;
            let r = resolve_body(right, schemas, outer)?;
            if l != r {
                return Err(SqlError::Invalid(format!(
                    "{} operands have {l} and {r} columns",
                    op.keyword()
                )));
            }
            Ok(l)
        }
    }
}

fn build_scope<'a>(sel: &Select, schemas: &'a [TableSchema]) -> Result<Scope<'a>, SqlError> {
    let mut scope: Scope<'a> = Vec::new();
    for item in &sel.from {
        let schema = schemas
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(&item.table))
            .ok_or_else(|| SqlError::UnknownTable(item.table.clone()))?;
        let name = item.name().to_string();
        if scope.iter().any(|s| s.name == name) {
            return Err(SqlError::Invalid(format!("table name '{name}' is used twice in FROM")));
        }
        scope.push(Source { name, schema });
    }
    Ok(scope)
}

fn resolve_select(sel: &mut Select, schemas: &[TableSchema], outer: &[&Scope<'_>]) -> Result<usize, SqlError> {
    let scope = build_scope(sel, schemas)?;
    for k in 0..sel.from.len() {
        if let Some(mut p) = sel.from[k].join_on.take() {
            // ON sees the items joined so far
            let visible: Scope<'_> = scope[..=k]
                .iter()
                .map(|s| Source {
                    name: s.name.clone(),
                    schema: s.schema,
                })
                .collect();
            let r = resolve_predicate(&mut p, &visible, schemas, outer);
            sel.from[k].join_on = Some(p);
            r?;
        }
    }
    if let Some(p) = &mut sel.where_clause {
        resolve_predicate(p, &scope, schemas, outer)?;
    }
    for c in &mut sel.group_by {
        c.binding = Some(lookup(c, &scope, outer)?);
    }
    let mut arity = 0;
    for item in &mut sel.items {
        match item {
            SelectItem::Wildcard => arity += scope.iter().map(|s| s.schema.arity()).sum::<usize>(),
            SelectItem::QualifiedWildcard(q) => {
                let src = scope
                    .iter()
                    .find(|s| &s.name == q)
                    .ok_or_else(|| SqlError::UnknownTable(q.clone()))?;
                arity += src.schema.arity();
            }
            SelectItem::Expr { expr, .. } => {
                resolve_expr(expr, &scope, outer)?;
                arity += 1;
            }
        }
    }
    check_grouping(sel)?;
    Ok(arity)
}

fn check_grouping(sel: &Select) -> Result<(), SqlError> {
    let aggregated = sel
        .items
        .iter()
        .any(|i| matches!(i, SelectItem::Expr { expr, .. } if expr.contains_aggregate()));
    if !aggregated && sel.group_by.is_empty() {
        return Ok(());
    }
    let groups: Vec<&Binding> = sel.group_by.iter().filter_map(|c| c.binding.as_ref()).collect();
    for item in &sel.items {
        match item {
            SelectItem::Wildcard | SelectItem::QualifiedWildcard(_) => {
                return Err(SqlError::Invalid("'*' cannot be used with aggregation".into()))
            }
            SelectItem::Expr { expr, .. } => check_grouped_expr(expr, &groups)?,
        }
    }
    Ok(())
}

fn check_grouped_expr(e: &SqlExpr, groups: &[&Binding]) -> Result<(), SqlError> {
    match e {
        SqlExpr::Column(c) => {
            if groups.iter().any(|g| Some(*g) == c.binding.as_ref()) {
                Ok(())
            } else {
                Err(SqlError::Invalid(format!(
                    "column {} must appear in GROUP BY or inside an aggregate",
                    display_ref(c)
                )))
            }
        }
        SqlExpr::Number(_) | SqlExpr::Text(_) | SqlExpr::Boolean(_) => Ok(()),
        SqlExpr::Neg(x) => check_grouped_expr(x, groups),
        SqlExpr::Binary(_, l, r) => {
            check_grouped_expr(l, groups)?;
            check_grouped_expr(r, groups)
        }
        SqlExpr::Aggregate { arg, .. } => match arg.as_deref() {
            None | Some(SqlExpr::Column(_)) => Ok(()),
            Some(a) if a.contains_aggregate() => Err(SqlError::Invalid("nested aggregates".into())),
            Some(_) => Err(SqlError::Unsupported("aggregate arguments other than a single column".into())),
        },
    }
}

fn resolve_expr(e: &mut SqlExpr, scope: &Scope<'_>, outer: &[&Scope<'_>]) -> Result<(), SqlError> {
    match e {
        SqlExpr::Column(c) => {
            c.binding = Some(lookup(c, scope, outer)?);
            Ok(())
        }
        SqlExpr::Number(_) | SqlExpr::Text(_) | SqlExpr::Boolean(_) => Ok(()),
        SqlExpr::Neg(x) => resolve_expr(x, scope, outer),
        SqlExpr::Binary(_, l, r) => {
            resolve_expr(l, scope, outer)?;
            resolve_expr(r, scope, outer)
        }
        SqlExpr::Aggregate { arg, .. } => match arg {
            Some(a) => resolve_expr(a, scope, outer),
            None => Ok(()),
        },
    }
}

fn no_aggregate(e: &SqlExpr) -> Result<(), SqlError> {
    if e.contains_aggregate() {
        return Err(SqlError::Invalid("aggregates are not allowed in WHERE or ON".into()));
    }
    Ok(())
}

fn resolve_predicate(
    p: &mut SqlPredicate,
    scope: &Scope<'_>,
    schemas: &[TableSchema],
    outer: &[&Scope<'_>],
) -> Result<(), SqlError> {
    let mut inner: Vec<&Scope<'_>> = vec![scope];
    inner.extend_from_slice(outer);
    match p {
        SqlPredicate::Literal(_) => Ok(()),
        SqlPredicate::Compare(_, l, r) => {
            no_aggregate(l)?;
            no_aggregate(r)?;
            resolve_expr(l, scope, outer)?;
            resolve_expr(r, scope, outer)
        }
        SqlPredicate::And(l, r) | SqlPredicate::Or(l, r) => {
            resolve_predicate(l, scope, schemas, outer)?;
            resolve_predicate(r, scope, schemas, outer)
        }
        SqlPredicate::Not(x) => resolve_predicate(x, scope, schemas, outer),
        SqlPredicate::IsNull { expr, .. } => {
            no_aggregate(expr)?;
            resolve_expr(expr, scope, outer)
        }
        SqlPredicate::InSubquery { expr, query, .. } => {
            no_aggregate(expr)?;
            resolve_expr(expr, scope, outer)?;
            let arity = resolve_in(query, schemas, &inner)?;
            if arity != 1 {
                return Err(SqlError::Invalid(format!("IN subquery returns {arity} columns")));
            }
            Ok(())
        }
        SqlPredicate::Exists { query, .. } => resolve_in(query, schemas, &inner).map(|_| ()),
    }
}

fn lookup(c: &ColumnRef, scope: &Scope<'_>, outer: &[&Scope<'_>]) -> Result<Binding, SqlError> {
    match find(c, scope) {
        Ok(Some(b)) => return Ok(b),
        Ok(None) => {}
        Err(e) => return Err(e),
    }
    for s in outer {
        if let Ok(Some(_)) = find(c, s) {
            return Err(SqlError::Unsupported(format!(
                "correlated subquery (reference to outer column {})",
                display_ref(c)
            )));
        }
    }
    match &c.qualifier {
        Some(q) if !scope.iter().any(|s| &s.name == q) => Err(SqlError::UnknownTable(q.clone())),
        _ => Err(SqlError::UnknownColumn(display_ref(c))),
    }
}

fn find(c: &ColumnRef, scope: &Scope<'_>) -> Result<Option<Binding>, SqlError> {
    let mut hit: Option<Binding> = None;
    for (i, src) in scope.iter().enumerate() {
        if let Some(q) = &c.qualifier {
            if &src.name != q {
                continue;
            }
        }
        if let Some(ord) = src.schema.ordinal(&c.name) {
            if hit.is_some() {
                return Err(SqlError::AmbiguousColumn(display_ref(c)));
            }
            hit = Some(Binding {
                source: i,
                table: src.schema.name.clone(),
                ordinal: ord,
            });
        }
    }
    Ok(hit)
}

fn display_ref(c: &ColumnRef) -> String {
    match &c.qualifier {
        Some(q) => format!("{q}.{}", c.name),
        None => c.name.clone(),
    }
}

/// Output column names; `None` for unnamed expressions.
pub(crate) fn output_names(body: &QueryBody, schemas: &[TableSchema]) -> Vec<Option<String>> {
    match body {
        QueryBody::SetOp { left, .. } => output_names(left, schemas),
        QueryBody::Select(sel) => {
            let table = |name: &str| -> Option<&TableSchema> {
                let item = sel.from.iter().find(|f| f.name() == name)?;
                schemas.iter().find(|s| s.name.eq_ignore_ascii_case(&item.table))
            };
            let mut out = Vec::new();
            for item in &sel.items {
                match item {
                    SelectItem::Wildcard => {
                        for f in &sel.from {
                            if let Some(s) = table(f.name()) {
                                out.extend(s.columns.iter().cloned().map(Some));
                            }
                        }
                    }
                    SelectItem::QualifiedWildcard(q) => {
                        if let Some(s) = table(q) {
                            out.extend(s.columns.iter().cloned().map(Some));
                        }
                    }
                    SelectItem::Expr { expr, alias } => out.push(match (alias, expr) {
                        (Some(a), _) => Some(a.clone()),
                        (None, SqlExpr::Column(c)) => Some(c.name.clone()),
                        _ => None,
                    }),
                }
            }
            out
        }
    }
}
