use super::ast::*;
use super::lexer::{tokenize, Pos, Token};
use super::SqlError;

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "order", "by", "as", "on", "join", "inner", "and", "or", "not", "in", "exists",
    "is", "null", "union", "except", "intersect", "distinct", "all", "asc", "desc", "true", "false", "left", "right",
    "full", "outer", "cross", "having", "limit", "minus", "create", "table",
];

pub(crate) struct Parser {
    toks: Vec<(Pos, Token)>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, SqlError> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.at].1
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].1
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> SqlError {
        let p = self.pos();
        SqlError::syntax(p.line, p.col, msg)
    }

    fn describe(&self) -> String {
        match self.peek() {
            Token::Word(w) => format!("'{w}'"),
            Token::Number(x) => format!("number {x}"),
            Token::Str(s) => format!("string '{s}'"),
            Token::Sym(s) => format!("'{s}'"),
            Token::End => "end of input".into(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Word(w) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {} but found {}", kw.to_ascii_uppercase(), self.describe())))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Token::Sym(t) if *t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SqlError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}' but found {}", self.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek() {
            Token::Word(w) if !RESERVED.contains(&w.as_str()) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.err(format!("expected {what} but found {}", self.describe()))),
        }
    }

    fn at_end(&mut self) -> Result<(), SqlError> {
        while self.eat_sym(";") {}
        if *self.peek() != Token::End {
            return Err(self.err(format!("unexpected {}", self.describe())));
        }
        Ok(())
    }

    // ---- DDL ----

    pub(crate) fn ddl(&mut self) -> Result<Vec<TableSchema>, SqlError> {
        let mut out: Vec<TableSchema> = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if *self.peek() == Token::End {
                return Ok(out);
            }
            self.expect_kw("create")?;
            self.expect_kw("table")?;
            if self.is_kw("if") {
                self.bump();
                self.expect_kw("not")?;
                self.expect_kw("exists")?;
            }
            let name = self.ident("a table name")?;
            if out.iter().any(|t| t.name == name) {
                return Err(SqlError::DuplicateTable(name));
            }
            self.expect_sym("(")?;
            let mut columns: Vec<String> = Vec::new();
            let mut types = Vec::new();
            loop {
                let constraint = ["primary", "foreign", "unique", "constraint", "check", "key"]
                    .iter()
                    .any(|k| self.is_kw(k));
                if constraint {
                    self.skip_definition()?;
                } else {
                    let col = self.ident("a column name")?;
                    if columns.contains(&col) {
                        return Err(SqlError::DuplicateColumn { table: name, column: col });
                    }
                    let ty = match self.peek() {
                        Token::Word(w) => Some(column_type(w)),
                        _ => None,
                    };
                    self.skip_definition()?;
                    columns.push(col);
                    types.push(ty);
                }
                if self.eat_sym(",") {
                    continue;
                }
                self.expect_sym(")")?;
                break;
            }
            if columns.is_empty() {
                return Err(SqlError::Invalid(format!("table {name} has no columns")));
            }
            out.push(TableSchema { name, columns, types });
        }
    }

    /// Skips tokens up to the next top-level ',' or ')'.
    fn skip_definition(&mut self) -> Result<(), SqlError> {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Token::End => return Err(self.err("unterminated CREATE TABLE")),
                Token::Sym("(") => depth += 1,
                Token::Sym(")") if depth == 0 => return Ok(()),
                Token::Sym(")") => depth -= 1,
                Token::Sym(",") if depth == 0 => return Ok(()),
                _ => {}
            }
            self.bump();
        }
    }

    // ---- queries ----

    pub(crate) fn statement(&mut self) -> Result<Query, SqlError> {
        let q = self.query()?;
        self.at_end()?;
        Ok(q)
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        let body = self.set_expr()?;
        let mut order_by = Vec::new();
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let key = match self.peek() {
                    Token::Number(x) => {
                        let x = *x;
                        if x.fract() != 0.0 || x < 1.0 {
                            return Err(self.err("ORDER BY position must be a positive integer"));
                        }
                        self.bump();
                        OrderKey::Position(x as usize)
                    }
                    _ => OrderKey::Column(self.column_ref()?),
                };
                let descending = if self.eat_kw("desc") {
                    true
                } else {
                    self.eat_kw("asc");
                    false
                };
                order_by.push(OrderItem {
                    key,
                    descending,
                    output: None,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        Ok(Query { body, order_by })
    }

    fn set_expr(&mut self) -> Result<QueryBody, SqlError> {
        let mut left = self.intersect_expr()?;
        loop {
            let op = if self.eat_kw("union") {
                SetOp::Union
            } else if self.eat_kw("except") || self.eat_kw("minus") {
                SetOp::Except
            } else {
                return Ok(left);
            };
            self.set_quantifier()?;
            let right = self.intersect_expr()?;
            left = QueryBody::SetOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn set_quantifier(&mut self) -> Result<(), SqlError> {
        if self.is_kw("all") {
            return Err(SqlError::Unsupported(
                "set operations with ALL (queries use set semantics)".into(),
            ));
        }
        self.eat_kw("distinct");
        Ok(())
    }

    fn intersect_expr(&mut self) -> Result<QueryBody, SqlError> {
        let mut left = self.query_primary()?;
        while self.eat_kw("intersect") {
            self.set_quantifier()?;
            let right = self.query_primary()?;
            left = QueryBody::SetOp {
                op: SetOp::Intersect,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn query_primary(&mut self) -> Result<QueryBody, SqlError> {
        if self.eat_sym("(") {
            let body = self.set_expr()?;
            if self.is_kw("order") {
                return Err(SqlError::Unsupported("ORDER BY inside a parenthesized query".into()));
            }
            self.expect_sym(")")?;
            return Ok(body);
        }
        Ok(QueryBody::Select(Box::new(self.select()?)))
    }

    fn select(&mut self) -> Result<Select, SqlError> {
        self.expect_kw("select")?;
        let distinct = if self.eat_kw("distinct") {
            true
        } else {
            self.eat_kw("all");
            false
        };
        let mut items = Vec::new();
        loop {
            items.push(self.select_item()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_kw("from")?;
        let from = self.from_list()?;
        let where_clause = if self.eat_kw("where") {
            Some(self.predicate()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            loop {
                group_by.push(self.column_ref()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.is_kw("having") {
            return Err(SqlError::Unsupported("HAVING".into()));
        }
        if self.is_kw("limit") {
            return Err(SqlError::Unsupported("LIMIT".into()));
        }
        Ok(Select {
            distinct,
            items,
            from,
            where_clause,
            group_by,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        if self.eat_sym("*") {
            return Ok(SelectItem::Wildcard);
        }
        if matches!(self.peek(), Token::Word(_))
            && *self.peek_at(1) == Token::Sym(".")
            && *self.peek_at(2) == Token::Sym("*")
        {
            let q = self.ident("a table name")?;
            self.bump();
            self.bump();
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw("as") || matches!(self.peek(), Token::Word(w) if !RESERVED.contains(&w.as_str())) {
            Some(self.ident("an alias")?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn table_ref(&mut self, join_on: Option<SqlPredicate>) -> Result<FromItem, SqlError> {
        if self.is_sym("(") {
            return Err(SqlError::Unsupported("subqueries in FROM".into()));
        }
        let table = self.ident("a table name")?;
        let alias = if self.eat_kw("as") || matches!(self.peek(), Token::Word(w) if !RESERVED.contains(&w.as_str())) {
            Some(self.ident("an alias")?)
        } else {
            None
        };
        Ok(FromItem { table, alias, join_on })
    }

    fn from_list(&mut self) -> Result<Vec<FromItem>, SqlError> {
        let mut from = vec![self.table_ref(None)?];
        loop {
            if self.eat_sym(",") {
                from.push(self.table_ref(None)?);
                continue;
            }
            for outer in ["left", "right", "full"] {
                if self.is_kw(outer) {
                    return Err(SqlError::Unsupported(format!("{} OUTER JOIN", outer.to_ascii_uppercase())));
                }
            }
            if self.eat_kw("cross") {
                self.expect_kw("join")?;
                from.push(self.table_ref(None)?);
                continue;
            }
            let inner = self.eat_kw("inner");
            if self.eat_kw("join") {
                let mut item = self.table_ref(None)?;
                self.expect_kw("on")?;
                item.join_on = Some(self.predicate()?);
                from.push(item);
                continue;
            }
            if inner {
                return Err(self.err("expected JOIN after INNER"));
            }
            return Ok(from);
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef, SqlError> {
        let first = self.ident("a column name")?;
        if self.eat_sym(".") {
            let name = self.ident("a column name")?;
            return Ok(ColumnRef {
                qualifier: Some(first),
                name,
                binding: None,
            });
        }
        Ok(ColumnRef {
            qualifier: None,
            name: first,
            binding: None,
        })
    }

    // ---- predicates ----

    pub(crate) fn predicate(&mut self) -> Result<SqlPredicate, SqlError> {
        let mut left = self.and_pred()?;
        while self.eat_kw("or") {
            let right = self.and_pred()?;
            left = SqlPredicate::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_pred(&mut self) -> Result<SqlPredicate, SqlError> {
        let mut left = self.not_pred()?;
        while self.eat_kw("and") {
            let right = self.not_pred()?;
            left = SqlPredicate::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_pred(&mut self) -> Result<SqlPredicate, SqlError> {
        if self.is_kw("not") && matches!(self.peek_at(1), Token::Word(w) if w == "exists") {
            self.bump();
            let SqlPredicate::Exists { query, .. } = self.atom_pred()? else {
                unreachable!("EXISTS parses to Exists")
            };
            return Ok(SqlPredicate::Exists { query, negated: true });
        }
        if self.is_kw("not") && !matches!(self.peek_at(1), Token::Word(w) if w == "in") {
            self.bump();
            return Ok(SqlPredicate::Not(Box::new(self.not_pred()?)));
        }
        self.atom_pred()
    }

    fn atom_pred(&mut self) -> Result<SqlPredicate, SqlError> {
        if self.eat_kw("exists") {
            self.expect_sym("(")?;
            let query = self.query()?;
            self.expect_sym(")")?;
            return Ok(SqlPredicate::Exists {
                query: Box::new(query),
                negated: false,
            });
        }
        if self.is_sym("(") {
            // either a parenthesized predicate or an expression starting with '('
            let save = self.at;
            self.bump();
            if let Ok(p) = self.predicate() {
                if self.eat_sym(")") && !self.continues_expression() {
                    return Ok(p);
                }
            }
            self.at = save;
        }
        if (self.is_kw("true") || self.is_kw("false")) && !self.continues_after(1) {
            let b = self.is_kw("true");
            self.bump();
            return Ok(SqlPredicate::Literal(b));
        }
        let lhs = self.expr()?;
        if let Token::Sym(s) = self.peek() {
            let op = match *s {
                "=" => Some(CmpOp::Eq),
                "<>" => Some(CmpOp::Ne),
                "<" => Some(CmpOp::Lt),
                "<=" => Some(CmpOp::Le),
                ">" => Some(CmpOp::Gt),
                ">=" => Some(CmpOp::Ge),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let rhs = self.expr()?;
                return Ok(SqlPredicate::Compare(op, lhs, rhs));
            }
        }
        if self.eat_kw("is") {
            let negated = self.eat_kw("not");
            self.expect_kw("null")?;
            return Ok(SqlPredicate::IsNull { expr: lhs, negated });
        }
        let negated = self.is_kw("not");
        if negated {
            self.bump();
            if !self.is_kw("in") {
                return Err(self.err("expected IN after NOT"));
            }
        }
        if self.eat_kw("in") {
            self.expect_sym("(")?;
            if self.is_kw("select") || self.is_sym("(") {
                let query = self.query()?;
                self.expect_sym(")")?;
                return Ok(SqlPredicate::InSubquery {
                    expr: lhs,
                    query: Box::new(query),
                    negated,
                });
            }
            // value list: desugared into equalities
            let mut pred: Option<SqlPredicate> = None;
            loop {
                let v = self.expr()?;
                let (op, join): (CmpOp, fn(Box<SqlPredicate>, Box<SqlPredicate>) -> SqlPredicate) = if negated {
                    (CmpOp::Ne, SqlPredicate::And)
                } else {
                    (CmpOp::Eq, SqlPredicate::Or)
                };
                let leaf = SqlPredicate::Compare(op, lhs.clone(), v);
                pred = Some(match pred {
                    None => leaf,
                    Some(p) => join(Box::new(p), Box::new(leaf)),
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            return Ok(pred.expect("at least one value"));
        }
        if self.is_kw("between") || self.is_kw("like") {
            return Err(SqlError::Unsupported(self.describe().to_ascii_uppercase()));
        }
        // a bare boolean-valued expression
        Ok(SqlPredicate::Compare(CmpOp::Eq, lhs, SqlExpr::Boolean(true)))
    }

    fn continues_expression(&self) -> bool {
        matches!(
            self.peek(),
            Token::Sym("=" | "<>" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "/")
        ) || self.is_kw("is")
            || self.is_kw("in")
            || (self.is_kw("not") && matches!(self.peek_at(1), Token::Word(w) if w == "in"))
    }

    fn continues_after(&self, n: usize) -> bool {
        matches!(
            self.peek_at(n),
            Token::Sym("=" | "<>" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "/")
        ) || matches!(self.peek_at(n), Token::Word(w) if w == "is" || w == "in")
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> Result<SqlExpr, SqlError> {
        let mut left = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(left);
            };
            let right = self.term()?;
            left = SqlExpr::Binary(op, Box::new(left), Box::new(right));
        }
    }

    fn term(&mut self) -> Result<SqlExpr, SqlError> {
        let mut left = self.factor()?;
        loop {
            let op = if self.eat_sym("*") {
                ArithOp::Mul
            } else if self.eat_sym("/") {
                ArithOp::Div
            } else {
                return Ok(left);
            };
            let right = self.factor()?;
            left = SqlExpr::Binary(op, Box::new(left), Box::new(right));
        }
    }

    fn factor(&mut self) -> Result<SqlExpr, SqlError> {
        if self.eat_sym("-") {
            return Ok(SqlExpr::Neg(Box::new(self.factor()?)));
        }
        if self.eat_sym("+") {
            return self.factor();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SqlExpr, SqlError> {
        match self.peek().clone() {
            Token::Number(x) => {
                self.bump();
                Ok(SqlExpr::Number(x))
            }
            Token::Str(s) => {
                self.bump();
                Ok(SqlExpr::Text(s))
            }
            Token::Sym("(") => {
                self.bump();
                if self.is_kw("select") {
                    return Err(SqlError::Unsupported("scalar subqueries".into()));
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Token::Word(w) => {
                match w.as_str() {
                    "true" | "false" => {
                        self.bump();
                        return Ok(SqlExpr::Boolean(w == "true"));
                    }
                    "null" => return Err(SqlError::Unsupported("NULL literals in queries".into())),
                    _ => {}
                }
                if *self.peek_at(1) == Token::Sym("(") {
                    return self.aggregate(&w);
                }
                Ok(SqlExpr::Column(self.column_ref()?))
            }
            _ => Err(self.err(format!("expected an expression but found {}", self.describe()))),
        }
    }

    fn aggregate(&mut self, name: &str) -> Result<SqlExpr, SqlError> {
        let func = match name {
            "count" => AggFunc::Count,
            "sum" => AggFunc::Sum,
            "avg" => AggFunc::Avg,
            "min" => AggFunc::Min,
            "max" => AggFunc::Max,
            other => return Err(SqlError::Unsupported(format!("function {}", other.to_ascii_uppercase()))),
        };
        self.bump();
        self.expect_sym("(")?;
        if func == AggFunc::Count && self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(SqlExpr::Aggregate {
                func,
                distinct: false,
                arg: None,
            });
        }
        let distinct = self.eat_kw("distinct");
        let arg = self.expr()?;
        if self.is_sym(",") {
            return Err(SqlError::Unsupported(format!("{} with several arguments", func.name())));
        }
        self.expect_sym(")")?;
        Ok(SqlExpr::Aggregate {
            func,
            distinct,
            arg: Some(Box::new(arg)),
        })
    }
}

fn column_type(word: &str) -> ColumnType {
    match word {
        "int" | "integer" | "bigint" | "smallint" | "tinyint" | "numeric" | "decimal" | "real" | "float" | "double"
        | "number" => ColumnType::Numeric,
        "text" | "varchar" | "char" | "character" | "string" | "nvarchar" | "clob" => ColumnType::Text,
        "bool" | "boolean" => ColumnType::Boolean,
        _ => ColumnType::Other,
    }
}
