use std::fmt;

/// Optional column type from DDL. Only used for generation-time checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Numeric,
    Text,
    Boolean,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<String>,
    pub types: Vec<Option<ColumnType>>,
}

impl TableSchema {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> TableSchema {
        TableSchema {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_ascii_lowercase()).collect(),
            types: vec![None; columns.len()],
        }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    /// 1-based ordinal of a column.
    pub fn ordinal(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(column)).map(|i| i + 1)
    }
}

/// Where a column reference points: the FROM item and the 1-based column ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binding {
    pub source: usize,
    pub table: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
    /// Filled in by name resolution; always present on a parsed query.
    pub binding: Option<Binding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands swapped.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlExpr {
    Column(ColumnRef),
    Number(f64),
    Text(String),
    Boolean(bool),
    Neg(Box<SqlExpr>),
    Binary(ArithOp, Box<SqlExpr>, Box<SqlExpr>),
    /// `arg` is `None` for `COUNT(*)`.
    Aggregate {
        func: AggFunc,
        distinct: bool,
        arg: Option<Box<SqlExpr>>,
    },
}

impl SqlExpr {
    pub fn contains_aggregate(&self) -> bool {
        match self {
            SqlExpr::Aggregate { .. } => true,
            SqlExpr::Neg(e) => e.contains_aggregate(),
            SqlExpr::Binary(_, l, r) => l.contains_aggregate() || r.contains_aggregate(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlPredicate {
    Literal(bool),
    Compare(CmpOp, SqlExpr, SqlExpr),
    And(Box<SqlPredicate>, Box<SqlPredicate>),
    Or(Box<SqlPredicate>, Box<SqlPredicate>),
    Not(Box<SqlPredicate>),
    IsNull { expr: SqlExpr, negated: bool },
    InSubquery { expr: SqlExpr, query: Box<Query>, negated: bool },
    Exists { query: Box<Query>, negated: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(String),
    Expr { expr: SqlExpr, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FromItem {
    pub table: String,
    pub alias: Option<String>,
    /// Condition of an `[INNER] JOIN ... ON`; `None` for comma-separated items.
    pub join_on: Option<SqlPredicate>,
}

impl FromItem {
    pub fn name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub where_clause: Option<SqlPredicate>,
    pub group_by: Vec<ColumnRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Except,
    Intersect,
}

impl SetOp {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOp::Union => "UNION",
            SetOp::Except => "EXCEPT",
            SetOp::Intersect => "INTERSECT",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryBody {
    Select(Box<Select>),
    SetOp {
        op: SetOp,
        left: Box<QueryBody>,
        right: Box<QueryBody>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderKey {
    /// 1-based position in the select list.
    Position(usize),
    Column(ColumnRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub key: OrderKey,
    pub descending: bool,
    /// Output column the key refers to; filled in by resolution.
    pub output: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub body: QueryBody,
    pub order_by: Vec<OrderItem>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_query(self))
    }
}
