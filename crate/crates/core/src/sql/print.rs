use std::fmt::Write as _;

use super::ast::*;

/// Renders a query as SQL text that parses back to the same AST.
pub fn print_query(q: &Query) -> String {
    let mut s = body(&q.body);
    if !q.order_by.is_empty() {
        s.push_str(" ORDER BY ");
        let keys: Vec<String> = q
            .order_by
            .iter()
            .map(|o| {
                let k = match &o.key {
                    OrderKey::Position(p) => p.to_string(),
                    OrderKey::Column(c) => column(c),
                };
                if o.descending {
                    format!("{k} DESC")
                } else {
                    k
                }
            })
            .collect();
        s.push_str(&keys.join(", "));
    }
    s
}

fn set_level(b: &QueryBody) -> u8 {
    match b {
        QueryBody::Select(_) => 3,
        QueryBody::SetOp { op: SetOp::Intersect, .. } => 2,
        QueryBody::SetOp { .. } => 1,
    }
}

fn body(b: &QueryBody) -> String {
    match b {
        QueryBody::Select(sel) => select(sel),
        QueryBody::SetOp { op, left, right } => {
            let level = set_level(b);
            let l = body(left);
            let r = body(right);
            let l = if set_level(left) < level { format!("({l})") } else { l };
            let r = if set_level(right) <= level { format!("({r})") } else { r };
            format!("{l} {} {r}", op.keyword())
        }
    }
}

fn select(sel: &Select) -> String {
    let mut s = String::from("SELECT ");
    if sel.distinct {
        s.push_str("DISTINCT ");
    }
    let items: Vec<String> = sel
        .items
        .iter()
        .map(|i| match i {
            SelectItem::Wildcard => "*".to_string(),
            SelectItem::QualifiedWildcard(q) => format!("{}.*", ident(q)),
            SelectItem::Expr { expr: e, alias } => match alias {
                Some(a) => format!("{} AS {}", expr(e), ident(a)),
                None => expr(e),
            },
        })
        .collect();
    s.push_str(&items.join(", "));
    s.push_str(" FROM ");
    for (k, f) in sel.from.iter().enumerate() {
        let mut t = ident(&f.table);
        if let Some(a) = &f.alias {
            let _ = write!(t, " {}", ident(a));
        }
        match (&f.join_on, k) {
            (_, 0) => s.push_str(&t),
            (Some(p), _) => {
                let _ = write!(s, " JOIN {t} ON {}", predicate(p));
            }
            (None, _) => {
                let _ = write!(s, ", {t}");
            }
        }
    }
    if let Some(p) = &sel.where_clause {
        let _ = write!(s, " WHERE {}", predicate(p));
    }
    if !sel.group_by.is_empty() {
        let cols: Vec<String> = sel.group_by.iter().map(column).collect();
        let _ = write!(s, " GROUP BY {}", cols.join(", "));
    }
    s
}

fn pred_level(p: &SqlPredicate) -> u8 {
    match p {
        SqlPredicate::Or(..) => 1,
        SqlPredicate::And(..) => 2,
        SqlPredicate::Not(_) => 3,
        _ => 4,
    }
}

fn predicate(p: &SqlPredicate) -> String {
    let level = pred_level(p);
    let wrap = |c: &SqlPredicate, strict: bool| {
        let t = predicate(c);
        let l = pred_level(c);
        if l < level || (strict && l == level) {
            format!("({t})")
        } else {
            t
        }
    };
    match p {
        SqlPredicate::Literal(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        SqlPredicate::Compare(op, l, r) => format!("{} {} {}", expr(l), op.symbol(), expr(r)),
        SqlPredicate::And(l, r) => format!("{} AND {}", wrap(l, false), wrap(r, true)),
        SqlPredicate::Or(l, r) => format!("{} OR {}", wrap(l, false), wrap(r, true)),
        SqlPredicate::Not(x) => format!("NOT {}", wrap(x, false)),
        SqlPredicate::IsNull { expr: e, negated } => {
            format!("{} IS {}NULL", expr(e), if *negated { "NOT " } else { "" })
        }
        SqlPredicate::InSubquery { expr: e, query, negated } => format!(
            "{} {}IN ({})",
            expr(e),
            if *negated { "NOT " } else { "" },
            print_query(query)
        ),
        SqlPredicate::Exists { query, negated } => {
            format!("{}EXISTS ({})", if *negated { "NOT " } else { "" }, print_query(query))
        }
    }
}

fn expr_level(e: &SqlExpr) -> u8 {
    match e {
        SqlExpr::Binary(ArithOp::Add | ArithOp::Sub, ..) => 1,
        SqlExpr::Binary(..) => 2,
        SqlExpr::Neg(_) => 3,
        _ => 4,
    }
}

fn expr(e: &SqlExpr) -> String {
    match e {
        SqlExpr::Column(c) => column(c),
        SqlExpr::Number(x) => format!("{x}"),
        SqlExpr::Text(t) => format!("'{}'", t.replace('\'', "''")),
        SqlExpr::Boolean(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        SqlExpr::Neg(x) => {
            if expr_level(x) < 4 {
                format!("-({})", expr(x))
            } else {
                format!("-{}", expr(x))
            }
        }
        SqlExpr::Binary(op, l, r) => {
            let level = expr_level(e);
            let ls = expr(l);
            let rs = expr(r);
            let ls = if expr_level(l) < level { format!("({ls})") } else { ls };
            let rs = if expr_level(r) <= level { format!("({rs})") } else { rs };
            format!("{ls} {} {rs}", op.symbol())
        }
        SqlExpr::Aggregate { func, distinct, arg } => match arg {
            None => format!("{}(*)", func.name()),
            Some(a) => format!("{}({}{})", func.name(), if *distinct { "DISTINCT " } else { "" }, expr(a)),
        },
    }
}

fn column(c: &ColumnRef) -> String {
    match &c.qualifier {
        Some(q) => format!("{}.{}", ident(q), ident(&c.name)),
        None => ident(&c.name),
    }
}

fn ident(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}
