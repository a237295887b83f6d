//! Relational algebra: IR, translation from SQL, and a reference evaluator.

mod datum;
mod oracle;
mod translate;

use std::fmt;

pub use datum::{Datum, Relation, Tuple};
pub use oracle::{eval_predicate, eval_scalar, oracle_eval, Database, Truth};
pub use translate::translate;

pub use crate::sql::{ArithOp, CmpOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RaError {
    #[error("unknown table '{0}'")]
    UnknownTable(String),
    #[error("table '{table}' has arity {actual}, expected {expected}")]
    Arity { table: String, expected: usize, actual: usize },
    #[error("column {ordinal} is out of range for a relation of arity {arity}")]
    Ordinal { ordinal: usize, arity: usize },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggOp {
    Sum,
    Count,
    Avg,
    Min,
    Max,
    CountDistinct,
}

impl AggOp {
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Sum => "SUM",
            AggOp::Count => "COUNT",
            AggOp::Avg => "AVG",
            AggOp::Min => "MIN",
            AggOp::Max => "MAX",
            AggOp::CountDistinct => "COUNT_DISTINCT",
        }
    }
}

/// An aggregate over 1-based columns. `Count` with no columns is `COUNT(*)`;
/// `Count`/`CountDistinct` over several columns skip rows where all are Null.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub op: AggOp,
    pub cols: Vec<usize>,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cols.is_empty() {
            return write!(f, "{}(*)", self.op.name());
        }
        let cols: Vec<String> = self.cols.iter().map(|c| c.to_string()).collect();
        write!(f, "{}({})", self.op.name(), cols.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    /// 1-based column of the input tuple.
    Column(usize),
    Literal(Datum),
    Neg(Box<ScalarExpr>),
    Arith(ArithOp, Box<ScalarExpr>, Box<ScalarExpr>),
}

impl ScalarExpr {
    fn max_column(&self) -> usize {
        match self {
            ScalarExpr::Column(c) => *c,
            ScalarExpr::Literal(_) => 0,
            ScalarExpr::Neg(x) => x.max_column(),
            ScalarExpr::Arith(_, l, r) => l.max_column().max(r.max_column()),
        }
    }

    fn has_zero_column(&self) -> bool {
        match self {
            ScalarExpr::Column(c) => *c == 0,
            ScalarExpr::Literal(_) => false,
            ScalarExpr::Neg(x) => x.has_zero_column(),
            ScalarExpr::Arith(_, l, r) => l.has_zero_column() || r.has_zero_column(),
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Column(c) => write!(f, "#{c}"),
            ScalarExpr::Literal(d) => write!(f, "{d}"),
            ScalarExpr::Neg(x) => write!(f, "-({x})"),
            ScalarExpr::Arith(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// A condition under three-valued logic.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Const(bool),
    Compare(CmpOp, ScalarExpr, ScalarExpr),
    IsNull(ScalarExpr),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
    /// Membership of a scalar in the single column of a subquery.
    In {
        expr: ScalarExpr,
        rel: Box<RAExpr>,
        negated: bool,
    },
    Exists {
        rel: Box<RAExpr>,
        negated: bool,
    },
}

impl Predicate {
    fn check(&self, arity: usize) -> Result<(), RaError> {
        let scalar = |e: &ScalarExpr| -> Result<(), RaError> {
            if e.has_zero_column() || e.max_column() > arity {
                return Err(RaError::Ordinal {
                    ordinal: e.max_column(),
                    arity,
                });
            }
            Ok(())
        };
        match self {
            Predicate::Const(_) => Ok(()),
            Predicate::Compare(_, l, r) => {
                scalar(l)?;
                scalar(r)
            }
            Predicate::IsNull(e) => scalar(e),
            Predicate::And(l, r) | Predicate::Or(l, r) => {
                l.check(arity)?;
                r.check(arity)
            }
            Predicate::Not(x) => x.check(arity),
            Predicate::In { expr, rel, .. } => {
                scalar(expr)?;
                if rel.arity()? != 1 {
                    return Err(RaError::Unsupported("IN over a multi-column relation".into()));
                }
                Ok(())
            }
            Predicate::Exists { rel, .. } => rel.arity().map(|_| ()),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Const(true) => f.write_str("TRUE"),
            Predicate::Const(false) => f.write_str("FALSE"),
            Predicate::Compare(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
            Predicate::IsNull(e) => write!(f, "{e} IS NULL"),
            Predicate::And(l, r) => write!(f, "({l} AND {r})"),
            Predicate::Or(l, r) => write!(f, "({l} OR {r})"),
            Predicate::Not(x) => write!(f, "NOT {x}"),
            Predicate::In { expr, rel, negated } => write!(
                f,
                "{expr} {}IN {}",
                if *negated { "NOT " } else { "" },
                rel.pretty_inline()
            ),
            Predicate::Exists { rel, negated } => {
                write!(f, "{}EXISTS {}", if *negated { "NOT " } else { "" }, rel.pretty_inline())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RAExpr {
    Reference { table: String, arity: usize },
    Project(Box<RAExpr>, Vec<usize>),
    /// Appends one computed column per expression.
    Extend(Box<RAExpr>, Vec<ScalarExpr>),
    Select(Box<RAExpr>, Predicate),
    /// Output: the key, the other left columns, the other right columns.
    EqJoin(Box<RAExpr>, Box<RAExpr>, usize, usize),
    Semijoin(Box<RAExpr>, Box<RAExpr>, usize, usize),
    Product(Box<RAExpr>, Box<RAExpr>),
    UnionSet(Box<RAExpr>, Box<RAExpr>),
    DiffSet(Box<RAExpr>, Box<RAExpr>),
    IntersectSet(Box<RAExpr>, Box<RAExpr>),
    DeDup(Box<RAExpr>),
    Sort(Box<RAExpr>, usize, Direction),
    /// Output: the grouping columns, then one column per aggregate.
    GroupAgg(Box<RAExpr>, Vec<usize>, Vec<Aggregate>),
    Standardize(Box<RAExpr>),
    ErrorTrap(Box<RAExpr>),
}

impl RAExpr {
    pub fn reference(table: impl Into<String>, arity: usize) -> RAExpr {
        RAExpr::Reference {
            table: table.into(),
            arity,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RAExpr::Reference { .. } => "Reference",
            RAExpr::Project(..) => "Project",
            RAExpr::Extend(..) => "Extend",
            RAExpr::Select(..) => "Select",
            RAExpr::EqJoin(..) => "EqJoin",
            RAExpr::Semijoin(..) => "Semijoin",
            RAExpr::Product(..) => "Product",
            RAExpr::UnionSet(..) => "UnionSet",
            RAExpr::DiffSet(..) => "DiffSet",
            RAExpr::IntersectSet(..) => "IntersectSet",
            RAExpr::DeDup(_) => "DeDup",
            RAExpr::Sort(..) => "Sort",
            RAExpr::GroupAgg(..) => "GroupAgg",
            RAExpr::Standardize(_) => "Standardize",
            RAExpr::ErrorTrap(_) => "ErrorTrap",
        }
    }

    pub fn children(&self) -> Vec<&RAExpr> {
        match self {
            RAExpr::Reference { .. } => vec![],
            RAExpr::Project(c, _)
            | RAExpr::Extend(c, _)
            | RAExpr::Select(c, _)
            | RAExpr::DeDup(c)
            | RAExpr::Sort(c, ..)
            | RAExpr::GroupAgg(c, ..)
            | RAExpr::Standardize(c)
            | RAExpr::ErrorTrap(c) => vec![c],
            RAExpr::EqJoin(l, r, ..)
            | RAExpr::Semijoin(l, r, ..)
            | RAExpr::Product(l, r)
            | RAExpr::UnionSet(l, r)
            | RAExpr::DiffSet(l, r)
            | RAExpr::IntersectSet(l, r) => vec![l, r],
        }
    }

    /// Output arity, checking every ordinal against its input.
    pub fn arity(&self) -> Result<usize, RaError> {
        let ord = |o: usize, arity: usize| {
            if o == 0 || o > arity {
                Err(RaError::Ordinal { ordinal: o, arity })
            } else {
                Ok(())
            }
        };
        Ok(match self {
            RAExpr::Reference { arity, .. } => *arity,
            RAExpr::Project(c, cols) => {
                let a = c.arity()?;
                for &o in cols {
                    ord(o, a)?;
                }
                cols.len()
            }
            RAExpr::Extend(c, exprs) => {
                let a = c.arity()?;
                for e in exprs {
                    if e.has_zero_column() || e.max_column() > a {
                        return Err(RaError::Ordinal {
                            ordinal: e.max_column(),
                            arity: a,
                        });
                    }
                }
                a + exprs.len()
            }
            RAExpr::Select(c, p) => {
                let a = c.arity()?;
                p.check(a)?;
                a
            }
            RAExpr::EqJoin(l, r, lo, ro) => {
                let (la, ra) = (l.arity()?, r.arity()?);
                ord(*lo, la)?;
                ord(*ro, ra)?;
                la + ra - 1
            }
            RAExpr::Semijoin(l, r, lo, ro) => {
                let (la, ra) = (l.arity()?, r.arity()?);
                ord(*lo, la)?;
                ord(*ro, ra)?;
                la
            }
            RAExpr::Product(l, r) => l.arity()? + r.arity()?,
            RAExpr::UnionSet(l, r) | RAExpr::DiffSet(l, r) | RAExpr::IntersectSet(l, r) => {
                let (la, ra) = (l.arity()?, r.arity()?);
                if la != ra {
                    return Err(RaError::Arity {
                        table: self.name().into(),
                        expected: la,
                        actual: ra,
                    });
                }
                la
            }
            RAExpr::DeDup(c) | RAExpr::Standardize(c) | RAExpr::ErrorTrap(c) => c.arity()?,
            RAExpr::Sort(c, k, _) => {
                let a = c.arity()?;
                ord(*k, a)?;
                a
            }
            RAExpr::GroupAgg(c, groups, aggs) => {
                let a = c.arity()?;
                for &g in groups {
                    ord(g, a)?;
                }
                for agg in aggs {
                    for &o in &agg.cols {
                        ord(o, a)?;
                    }
                    if agg.cols.is_empty() && agg.op != AggOp::Count {
                        return Err(RaError::Unsupported(format!("{} without a column", agg.op.name())));
                    }
                }
                groups.len() + aggs.len()
            }
        })
    }

    /// Number of operator nodes, subqueries included.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Nested functional form, one argument per line, one space of indent
    /// per level.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        self.pp(0, &mut out);
        out
    }

    fn pp(&self, depth: usize, out: &mut String) {
        if let RAExpr::Reference { table, .. } = self {
            out.push_str(&format!("Reference({table})"));
            return;
        }
        let list = |v: &[usize]| {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(", "))
        };
        let mut args: Vec<Result<&RAExpr, String>> = self.children().into_iter().map(Ok).collect();
        match self {
            RAExpr::Project(_, cols) => args.push(Err(list(cols))),
            RAExpr::Extend(_, exprs) => {
                let items: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
                args.push(Err(format!("[{}]", items.join(", "))));
            }
            RAExpr::Select(_, p) => args.push(Err(p.to_string())),
            RAExpr::EqJoin(_, _, l, r) | RAExpr::Semijoin(_, _, l, r) => args.push(Err(format!("{l},{r}"))),
            RAExpr::Sort(_, k, d) => {
                args.push(Err(k.to_string()));
                args.push(Err(if *d == Direction::Asc { "ASC" } else { "DESC" }.to_string()));
            }
            RAExpr::GroupAgg(_, groups, aggs) => {
                args.push(Err(list(groups)));
                let items: Vec<String> = aggs.iter().map(|a| a.to_string()).collect();
                args.push(Err(format!("[{}]", items.join(", "))));
            }
            _ => {}
        }
        out.push_str(self.name());
        out.push_str("(\n");
        let n = args.len();
        for (i, a) in args.into_iter().enumerate() {
            out.push_str(&" ".repeat(depth + 1));
            match a {
                Ok(child) => child.pp(depth + 1, out),
                Err(text) => out.push_str(&text),
            }
            if i + 1 < n {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str(&" ".repeat(depth));
        out.push(')');
    }

    /// Single-line form, used inside predicates.
    pub fn pretty_inline(&self) -> String {
        normalize_whitespace(&self.pretty_print())
    }
}

impl fmt::Display for RAExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty_print())
    }
}

/// Collapses line breaks and indentation: removes whitespace after `(`,
/// `,` and `[` and before `)`, `,` and `]`; other runs become one space.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::new();
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            let prev = out.chars().last();
            let glue = matches!(prev, None | Some('(' | ',' | '[')) || matches!(c, ')' | ',' | ']');
            if !glue {
                out.push(' ');
            }
            pending_space = false;
        }
        out.push(c);
    }
    out
}
