use crate::grid::{CellRef, CellValue, Coord, ErrorKind, RangeRef, RefComponent};

use super::ast::{BinaryOp, Expr, Function, UnaryOp};
use super::{column_index, FormulaError, Notation};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Err(ErrorKind),
    Name(String),
    Cell(CellRef),
    Col(RefComponent),
    Row(RefComponent),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Colon,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    notation: Notation,
    anchor: Coord,
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            position: at,
            message: msg.into(),
        }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, FormulaError> {
        let mut out = Vec::new();
        while let Some(b) = self.peek(0) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
                continue;
            }
            let start = self.pos;
            let tok = match b {
                b'0'..=b'9' | b'.' => self.number()?,
                b'"' => self.string()?,
                b'#' => self.error_token()?,
                b'(' => self.single(Tok::LParen),
                b')' => self.single(Tok::RParen),
                b',' => self.single(Tok::Comma),
                b':' => self.single(Tok::Colon),
                b'+' => self.single(Tok::Op("+")),
                b'-' => self.single(Tok::Op("-")),
                b'*' => self.single(Tok::Op("*")),
                b'/' => self.single(Tok::Op("/")),
                b'^' => self.single(Tok::Op("^")),
                b'&' => self.single(Tok::Op("&")),
                b'=' => self.single(Tok::Op("=")),
                b'<' => match self.peek(1) {
                    Some(b'=') => self.double(Tok::Op("<=")),
                    Some(b'>') => self.double(Tok::Op("<>")),
                    _ => self.single(Tok::Op("<")),
                },
                b'>' => match self.peek(1) {
                    Some(b'=') => self.double(Tok::Op(">=")),
                    _ => self.single(Tok::Op(">")),
                },
                b'$' | b'A'..=b'Z' | b'a'..=b'z' | b'_' => self.word()?,
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(self.err(start, format!("unexpected character '{ch}'")));
                }
            };
            out.push((start, tok));
        }
        Ok(out)
    }

    fn single(&mut self, t: Tok) -> Tok {
        self.pos += 1;
        t
    }

    fn double(&mut self, t: Tok) -> Tok {
        self.pos += 2;
        t
    }

    fn number(&mut self) -> Result<Tok, FormulaError> {
        let start = self.pos;
        if self.notation == Notation::A1 {
            // whole row `5:5`
            if let Some(row) = self.digits() {
                if self.eat(b':') {
                    if let Some(row2) = self.digits() {
                        if row2 == row && row >= 1 {
                            return Ok(Tok::Row(self.a1_axis(row, false, self.anchor.row)));
                        }
                    }
                }
            }
            self.pos = start;
        }
        while matches!(self.peek(0), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(0), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(0), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(0), Some(b'0'..=b'9')) {
                while matches!(self.peek(0), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Tok::Num(x)),
            _ => Err(self.err(start, format!("malformed number '{text}'"))),
        }
    }

    fn string(&mut self) -> Result<Tok, FormulaError> {
        let start = self.pos;
        self.pos += 1;
        let mut text = String::new();
        loop {
            let rest = &self.src[self.pos..];
            let Some(q) = rest.find('"') else {
                return Err(self.err(start, "unterminated text literal"));
            };
            text.push_str(&rest[..q]);
            self.pos += q + 1;
            if self.peek(0) == Some(b'"') {
                text.push('"');
                self.pos += 1;
            } else {
                return Ok(Tok::Str(text));
            }
        }
    }

    fn error_token(&mut self) -> Result<Tok, FormulaError> {
        let rest = &self.src[self.pos..];
        for (token, kind) in ErrorKind::TOKENS {
            if rest.len() >= token.len() && rest[..token.len()].eq_ignore_ascii_case(token) {
                self.pos += token.len();
                return Ok(Tok::Err(kind));
            }
        }
        Err(self.err(self.pos, "unknown error literal"))
    }

    fn word(&mut self) -> Result<Tok, FormulaError> {
        let start = self.pos;
        let reference = match self.notation {
            Notation::R1C1 => self.r1c1_ref(),
            Notation::A1 => self.a1_ref()?,
        };
        if let Some(tok) = reference {
            let boundary = !matches!(
                self.peek(0),
                Some(b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_' | b'.' | b'(' | b'$' | b'[')
            );
            if boundary {
                return Ok(tok);
            }
        }
        self.pos = start;
        if self.peek(0) == Some(b'$') {
            return Err(self.err(start, "malformed reference"));
        }
        while matches!(
            self.peek(0),
            Some(b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_' | b'.')
        ) {
            self.pos += 1;
        }
        Ok(Tok::Name(self.src[start..self.pos].to_string()))
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(0), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        self.src[start..self.pos].parse().ok()
    }

    /// `n`, `[d]`, or nothing after an `R`/`C` marker.
    fn r1c1_component(&mut self) -> Option<RefComponent> {
        match self.peek(0) {
            Some(b'0'..=b'9') => {
                let n = self.digits()?;
                (n >= 1).then_some(RefComponent::Absolute(n))
            }
            Some(b'[') => {
                let save = self.pos;
                self.pos += 1;
                let neg = self.peek(0) == Some(b'-');
                if neg || self.peek(0) == Some(b'+') {
                    self.pos += 1;
                }
                let n = self.digits();
                if n.is_none() || self.peek(0) != Some(b']') {
                    self.pos = save;
                    return None;
                }
                self.pos += 1;
                let n = i32::try_from(n?).ok()?;
                Some(RefComponent::relative(if neg { -n } else { n }))
            }
            _ => Some(RefComponent::Current),
        }
    }

    fn r1c1_ref(&mut self) -> Option<Tok> {
        let first = self.peek(0)?.to_ascii_uppercase();
        if first == b'R' {
            self.pos += 1;
            let row = self.r1c1_component()?;
            if matches!(self.peek(0), Some(b'C' | b'c')) {
                self.pos += 1;
                let col = self.r1c1_component()?;
                return Some(Tok::Cell(CellRef::new(row, col)));
            }
            return Some(Tok::Row(row));
        }
        if first == b'C' {
            self.pos += 1;
            let col = self.r1c1_component()?;
            return Some(Tok::Col(col));
        }
        None
    }

    /// `$?LETTERS$?DIGITS`, `$?LETTERS:$?LETTERS`, or `$?DIGITS:$?DIGITS` (the
    /// last one is entered through `word` only when it starts with `$`).
    fn a1_ref(&mut self) -> Result<Option<Tok>, FormulaError> {
        let start = self.pos;
        let col_abs = self.eat(b'$');
        let letters_start = self.pos;
        while matches!(self.peek(0), Some(b'A'..=b'Z' | b'a'..=b'z')) {
            self.pos += 1;
        }
        let letters = &self.src[letters_start..self.pos];
        if letters.is_empty() {
            // `$5:$5`
            if let Some(row) = self.digits() {
                if self.eat(b':') {
                    let abs2 = self.eat(b'$');
                    if let Some(row2) = self.digits() {
                        if row2 == row && abs2 == col_abs && row >= 1 {
                            return Ok(Some(Tok::Row(self.a1_axis(row, col_abs, self.anchor.row))));
                        }
                    }
                }
            }
            self.pos = start;
            return Ok(None);
        }
        let Some(col) = column_index(letters) else {
            self.pos = start;
            return Ok(None);
        };
        let col_comp = self.a1_axis(col, col_abs, self.anchor.col);
        if self.peek(0) == Some(b':') {
            let save = self.pos;
            self.pos += 1;
            let abs2 = self.eat(b'$');
            let l2 = self.pos;
            while matches!(self.peek(0), Some(b'A'..=b'Z' | b'a'..=b'z')) {
                self.pos += 1;
            }
            let letters2 = &self.src[l2..self.pos];
            if !letters2.is_empty() && !matches!(self.peek(0), Some(b'0'..=b'9' | b'$')) {
                if column_index(letters2) == Some(col) && abs2 == col_abs {
                    return Ok(Some(Tok::Col(col_comp)));
                }
                return Err(self.err(start, "multi-column ranges are not supported"));
            }
            self.pos = save;
            return Ok(None);
        }
        let row_abs = self.eat(b'$');
        let Some(row) = self.digits() else {
            self.pos = start;
            return Ok(None);
        };
        if row == 0 {
            return Err(self.err(start, "row 0 does not exist"));
        }
        let row_comp = self.a1_axis(row, row_abs, self.anchor.row);
        Ok(Some(Tok::Cell(CellRef::new(row_comp, col_comp))))
    }

    fn a1_axis(&self, n: u32, absolute: bool, anchor: u32) -> RefComponent {
        if absolute {
            RefComponent::Absolute(n)
        } else {
            let delta = i64::from(n) - i64::from(anchor);
            RefComponent::relative(delta as i32)
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek(0) == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err(&self, msg: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            position: self.position(),
            message: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn binary_op(&self, level: u8) -> Option<BinaryOp> {
        let Some(Tok::Op(sym)) = self.peek() else {
            return None;
        };
        let op = match *sym {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "^" => BinaryOp::Pow,
            "&" => BinaryOp::Concat,
            "=" => BinaryOp::Eq,
            "<>" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            _ => return None,
        };
        (op.precedence() == level).then_some(op)
    }

    fn expr(&mut self, level: u8) -> Result<Expr, FormulaError> {
        if level > 5 {
            return self.unary();
        }
        let mut lhs = self.expr(level + 1)?;
        while let Some(op) = self.binary_op(level) {
            self.at += 1;
            let rhs = self.expr(level + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Some(Tok::Op("-")) => {
                self.at += 1;
                if let Some(Tok::Num(x)) = self.peek() {
                    let x = *x;
                    self.at += 1;
                    return Ok(Expr::Literal(CellValue::number(-x)));
                }
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            Some(Tok::Op("+")) => {
                self.at += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let pos = self.position();
        match self.next() {
            Some(Tok::Num(x)) => Ok(Expr::Literal(CellValue::number(x))),
            Some(Tok::Str(s)) => Ok(Expr::Literal(CellValue::Text(s))),
            Some(Tok::Err(kind)) => Ok(Expr::Literal(CellValue::Error(kind))),
            Some(Tok::LParen) => {
                let inner = self.expr(1)?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.at -= 1;
                        Err(self.err("expected ')'"))
                    }
                }
            }
            Some(Tok::Cell(start)) => {
                if self.peek() == Some(&Tok::Colon) {
                    self.at += 1;
                    match self.next() {
                        Some(Tok::Cell(end)) => Ok(Expr::Range(RangeRef::Area { start, end })),
                        _ => {
                            self.at -= 1;
                            Err(self.err("expected a cell reference after ':'"))
                        }
                    }
                } else {
                    Ok(Expr::Ref(start))
                }
            }
            Some(Tok::Col(c)) => Ok(Expr::Range(RangeRef::Column(c))),
            Some(Tok::Row(r)) => Ok(Expr::Range(RangeRef::Row(r))),
            Some(Tok::Name(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.at += 1;
                    let f = Function::from_name(&name)
                        .ok_or_else(|| FormulaError::UnknownFunction(name.to_ascii_uppercase()))?;
                    let args = self.arguments()?;
                    if !f.accepts(args.len()) {
                        return Err(FormulaError::Arity {
                            function: f.name().to_string(),
                            count: args.len(),
                        });
                    }
                    Ok(Expr::Call(f, args))
                } else if name.eq_ignore_ascii_case("TRUE") {
                    Ok(Expr::Literal(CellValue::Boolean(true)))
                } else if name.eq_ignore_ascii_case("FALSE") {
                    Ok(Expr::Literal(CellValue::Boolean(false)))
                } else {
                    Err(FormulaError::Syntax {
                        position: pos,
                        message: format!("unknown name '{name}'"),
                    })
                }
            }
            Some(_) => {
                self.at -= 1;
                Err(self.err("expected a value"))
            }
            None => Err(self.err("unexpected end of formula")),
        }
    }

    fn arguments(&mut self) -> Result<Vec<Expr>, FormulaError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.at += 1;
            return Ok(args);
        }
        loop {
            if matches!(self.peek(), Some(Tok::Comma | Tok::RParen)) {
                args.push(Expr::Literal(CellValue::Blank));
            } else {
                args.push(self.expr(1)?);
            }
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(args),
                _ => {
                    self.at -= 1;
                    return Err(self.err("expected ',' or ')'"));
                }
            }
        }
    }
}

/// Parses formula text (with its leading `=`) or a bare literal.
///
/// `anchor` is the cell the text belongs to; A1 references are converted to
/// relative offsets from it. It is ignored for R1C1 text.
pub fn parse_formula(text: &str, notation: Notation, anchor: Coord) -> Result<Expr, FormulaError> {
    let (body, offset) = match text.strip_prefix('=') {
        Some(rest) => (rest, 1),
        None => return parse_literal(text).map(Expr::Literal),
    };
    let toks = Lexer {
        src: body,
        bytes: body.as_bytes(),
        pos: 0,
        notation,
        anchor,
    }
    .tokens()
    .map_err(|e| e.shifted(offset))?;
    let mut parser = Parser {
        toks,
        at: 0,
        end: body.len(),
    };
    let expr = parser.expr(1).map_err(|e| e.shifted(offset))?;
    if parser.at < parser.toks.len() {
        return Err(parser.err("unexpected trailing input").shifted(offset));
    }
    Ok(expr)
}

/// Parses a literal cell entry: number, `"`-quoted text, TRUE/FALSE, or an error token.
pub fn parse_literal(text: &str) -> Result<CellValue, FormulaError> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(CellValue::Blank);
    }
    if t.eq_ignore_ascii_case("TRUE") {
        return Ok(CellValue::Boolean(true));
    }
    if t.eq_ignore_ascii_case("FALSE") {
        return Ok(CellValue::Boolean(false));
    }
    if let Some(kind) = ErrorKind::from_token(t) {
        return Ok(CellValue::Error(kind));
    }
    if t.starts_with('"') {
        if t.len() >= 2 && t.ends_with('"') {
            let inner = &t[1..t.len() - 1];
            let mut out = String::new();
            let mut chars = inner.chars().peekable();
            while let Some(c) = chars.next() {
                if c == '"' && chars.next() != Some('"') {
                    return Err(FormulaError::Syntax {
                        position: 0,
                        message: "stray quote in text literal".into(),
                    });
                }
                out.push(c);
            }
            return Ok(CellValue::Text(out));
        }
        return Err(FormulaError::Syntax {
            position: 0,
            message: "unterminated text literal".into(),
        });
    }
    match t.parse::<f64>() {
        Ok(x) if x.is_finite() && !t.contains(['i', 'I', 'n', 'N']) => Ok(CellValue::number(x)),
        _ => Err(FormulaError::Syntax {
            position: 0,
            message: format!("'{t}' is not a literal"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r1c1(text: &str) -> Expr {
        parse_formula(text, Notation::R1C1, Coord::new(1, 1)).unwrap()
    }

    fn col(n: u32) -> Expr {
        Expr::Range(RangeRef::Column(RefComponent::Absolute(n)))
    }

    #[test]
    fn sort_count_formula() {
        let e = r1c1("=COUNTA(C1)-COUNTIFS(C1,NA())");
        let expected = Expr::binary(
            BinaryOp::Sub,
            Expr::call(Function::CountA, vec![col(1)]),
            Expr::call(Function::CountIfs, vec![col(1), Expr::call(Function::Na, vec![])]),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn minimal_reference() {
        assert_eq!(
            r1c1("=RC1"),
            Expr::Ref(CellRef::new(RefComponent::Current, RefComponent::Absolute(1)))
        );
    }

    #[test]
    fn level_formula_prefix() {
        let e = r1c1("=IF(RC1=R1C3,0,1)");
        let cond = Expr::binary(
            BinaryOp::Eq,
            Expr::Ref(CellRef::row_local(1)),
            Expr::Ref(CellRef::absolute(1, 3)),
        );
        assert_eq!(e, Expr::call(Function::If, vec![cond, Expr::num(0.0), Expr::num(1.0)]));
    }

    #[test]
    fn relative_components_and_ranges() {
        let e = r1c1("=SUM(R1C1:R[-1]C[2],C[-6],R3)");
        let Expr::Call(Function::Sum, args) = e else { panic!() };
        assert_eq!(
            args[0],
            Expr::Range(RangeRef::Area {
                start: CellRef::absolute(1, 1),
                end: CellRef::new(RefComponent::Relative(-1), RefComponent::Relative(2)),
            })
        );
        assert_eq!(args[1], Expr::Range(RangeRef::Column(RefComponent::Relative(-6))));
        assert_eq!(args[2], Expr::Range(RangeRef::Row(RefComponent::Absolute(3))));
    }

    #[test]
    fn function_names_are_not_references() {
        let e = r1c1("=ROW()+COLUMN()");
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Add,
                Expr::call(Function::Row, vec![]),
                Expr::call(Function::Column, vec![])
            )
        );
    }

    #[test]
    fn precedence_orders_operators() {
        // unary minus binds tighter than ^, and & below +
        assert_eq!(r1c1("=-RC1^2"), r1c1("=(-RC1)^2"));
        assert_eq!(r1c1("=1+2&3"), r1c1("=(1+2)&3"));
        assert_eq!(r1c1("=1&2=3"), r1c1("=(1&2)=3"));
        assert_eq!(r1c1("=1-2-3"), r1c1("=(1-2)-3"));
        assert_eq!(r1c1("=2*3^2"), r1c1("=2*(3^2)"));
        assert_eq!(r1c1("=-5"), Expr::num(-5.0));
    }

    #[test]
    fn empty_arguments_are_blank() {
        assert_eq!(
            r1c1("=IF(TRUE,,1)"),
            Expr::call(
                Function::If,
                vec![
                    Expr::Literal(CellValue::Boolean(true)),
                    Expr::Literal(CellValue::Blank),
                    Expr::num(1.0)
                ]
            )
        );
    }

    #[test]
    fn error_and_text_literals() {
        assert_eq!(
            r1c1("=#VALUE!=#VALUE!"),
            Expr::binary(
                BinaryOp::Eq,
                Expr::Literal(CellValue::Error(ErrorKind::Value)),
                Expr::Literal(CellValue::Error(ErrorKind::Value))
            )
        );
        assert_eq!(r1c1("=\"say \"\"hi\"\"\""), Expr::text("say \"hi\""));
        assert_eq!(r1c1("=#N/A!"), Expr::Literal(CellValue::Error(ErrorKind::Na)));
    }

    #[test]
    fn unknown_function_and_syntax_errors() {
        assert_eq!(
            parse_formula("=VLOOKUP(1,C1,1)", Notation::R1C1, Coord::new(1, 1)),
            Err(FormulaError::UnknownFunction("VLOOKUP".into()))
        );
        match parse_formula("=1+", Notation::R1C1, Coord::new(1, 1)) {
            Err(FormulaError::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("=(1", Notation::R1C1, Coord::new(1, 1)).is_err());
        assert!(parse_formula("=NA(1)", Notation::R1C1, Coord::new(1, 1)).is_err());
    }

    #[test]
    fn a1_references_become_offsets_from_the_anchor() {
        let e = parse_formula("=G4+$G$4+$G4", Notation::A1, Coord::new(5, 3)).unwrap();
        let rel = CellRef::new(RefComponent::Relative(-1), RefComponent::Relative(4));
        let abs = CellRef::absolute(4, 7);
        let mixed = CellRef::new(RefComponent::Relative(-1), RefComponent::Absolute(7));
        let expected = Expr::binary(
            BinaryOp::Add,
            Expr::binary(BinaryOp::Add, Expr::Ref(rel), Expr::Ref(abs)),
            Expr::Ref(mixed),
        );
        assert_eq!(e, expected);
        let cols = parse_formula("=COUNTA(A:A,$B:$B)", Notation::A1, Coord::new(2, 1)).unwrap();
        assert_eq!(
            cols,
            Expr::call(
                Function::CountA,
                vec![
                    Expr::Range(RangeRef::Column(RefComponent::Current)),
                    Expr::Range(RangeRef::Column(RefComponent::Absolute(2))),
                ]
            )
        );
    }

    #[test]
    fn literals_without_equals() {
        assert_eq!(parse_formula("42", Notation::A1, Coord::new(1, 1)), Ok(Expr::num(42.0)));
        assert_eq!(parse_literal("#N/A"), Ok(CellValue::Error(ErrorKind::Na)));
        assert_eq!(parse_literal("\"007\""), Ok(CellValue::text("007")));
        assert_eq!(parse_literal("true"), Ok(CellValue::Boolean(true)));
        assert!(parse_literal("inf").is_err());
        assert!(parse_literal("abc").is_err());
    }
}
