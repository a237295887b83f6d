use std::fmt;

use crate::grid::{resolve_ref, CellRef, CellValue, Coord, RangeRef, RefComponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are left-associative.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => 1,
            BinaryOp::Concat => 2,
            BinaryOp::Add | BinaryOp::Sub => 3,
            BinaryOp::Mul | BinaryOp::Div => 4,
            BinaryOp::Pow => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 1
    }
}

macro_rules! catalog {
    ($($variant:ident => $name:literal, $min:expr, $max:expr;)*) => {
        /// The supported function library.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Function {
            $($variant,)*
        }

        impl Function {
            pub const ALL: &'static [Function] = &[$(Function::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Function::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Function> {
                let upper = name.to_ascii_uppercase();
                match upper.as_str() {
                    $($name => Some(Function::$variant),)*
                    _ => None,
                }
            }

            /// Inclusive argument-count bounds; `None` means unbounded.
            pub fn arity(self) -> (usize, Option<usize>) {
                match self {
                    $(Function::$variant => ($min, $max),)*
                }
            }
        }
    };
}

catalog! {
    If => "IF", 2, Some(3);
    And => "AND", 1, None;
    Or => "OR", 1, None;
    Not => "NOT", 1, Some(1);
    Na => "NA", 0, Some(0);
    IsNa => "ISNA", 1, Some(1);
    IsErr => "ISERR", 1, Some(1);
    IsError => "ISERROR", 1, Some(1);
    IfError => "IFERROR", 2, Some(2);
    Match => "MATCH", 2, Some(3);
    Index => "INDEX", 2, Some(3);
    Offset => "OFFSET", 3, Some(5);
    CountIf => "COUNTIF", 2, Some(2);
    CountIfs => "COUNTIFS", 2, None;
    SumIfs => "SUMIFS", 3, None;
    Sum => "SUM", 1, None;
    Min => "MIN", 1, None;
    Max => "MAX", 1, None;
    CountA => "COUNTA", 1, None;
    Row => "ROW", 0, Some(1);
    Column => "COLUMN", 0, Some(1);
    Mod => "MOD", 2, Some(2);
    Quotient => "QUOTIENT", 2, Some(2);
    Power => "POWER", 2, Some(2);
}

impl Function {
    /// Checks the argument count, including the pairing rules of COUNTIFS and SUMIFS.
    pub fn accepts(self, argc: usize) -> bool {
        let (min, max) = self.arity();
        if argc < min || max.is_some_and(|m| argc > m) {
            return false;
        }
        match self {
            Function::CountIfs => argc.is_multiple_of(2),
            Function::SumIfs => argc % 2 == 1,
            _ => true,
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// `Blank` only appears as an omitted function argument.
    Literal(CellValue),
    Ref(CellRef),
    Range(RangeRef),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Vec<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Literal(CellValue::Number(x))
    }

    pub fn text(s: impl Into<String>) -> Expr {
        Expr::Literal(CellValue::Text(s.into()))
    }

    pub fn call(f: Function, args: Vec<Expr>) -> Expr {
        Expr::Call(f, args)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Visits every node, parents before children.
    pub fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Unary(_, e) => e.walk(visit),
            Expr::Binary(_, l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(visit)),
            Expr::Literal(_) | Expr::Ref(_) | Expr::Range(_) => {}
        }
    }

    pub fn uses_function(&self, f: Function) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Call(g, _) if *g == f) {
                found = true;
            }
        });
        found
    }

    /// Rewrites every reference to its absolute form at `anchor`.
    ///
    /// References that resolve outside the sheet are left untouched. Two
    /// formulas that address the same cells from `anchor` compare equal after
    /// this, whatever notation they were written in.
    pub fn resolved_at(&self, anchor: Coord) -> Expr {
        fn cell(r: CellRef, anchor: Coord) -> CellRef {
            match resolve_ref(r, anchor) {
                Ok(c) => CellRef::absolute(c.row, c.col),
                Err(_) => r.normalized(),
            }
        }
        fn axis(c: RefComponent, anchor: u32) -> RefComponent {
            let v = c.resolve(anchor);
            if v >= 1 && v <= i64::from(u32::MAX) {
                RefComponent::Absolute(v as u32)
            } else {
                c.normalized()
            }
        }
        match self {
            Expr::Literal(v) => Expr::Literal(v.clone()),
            Expr::Ref(r) => Expr::Ref(cell(*r, anchor)),
            Expr::Range(RangeRef::Area { start, end }) => Expr::Range(RangeRef::Area {
                start: cell(*start, anchor),
                end: cell(*end, anchor),
            }),
            Expr::Range(RangeRef::Column(c)) => Expr::Range(RangeRef::Column(axis(*c, anchor.col))),
            Expr::Range(RangeRef::Row(r)) => Expr::Range(RangeRef::Row(axis(*r, anchor.row))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.resolved_at(anchor))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.resolved_at(anchor)),
                Box::new(r.resolved_at(anchor)),
            ),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.resolved_at(anchor)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_round_trip() {
        for f in Function::ALL {
            assert_eq!(Function::from_name(f.name()), Some(*f));
            assert_eq!(Function::from_name(&f.name().to_lowercase()), Some(*f));
        }
        assert_eq!(Function::ALL.len(), 24);
        assert_eq!(Function::from_name("VLOOKUP"), None);
    }

    #[test]
    fn criteria_functions_need_pairs() {
        assert!(Function::CountIfs.accepts(4));
        assert!(!Function::CountIfs.accepts(3));
        assert!(Function::SumIfs.accepts(5));
        assert!(!Function::SumIfs.accepts(4));
        assert!(Function::Na.accepts(0));
        assert!(!Function::Na.accepts(1));
    }
}
