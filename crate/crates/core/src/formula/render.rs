use crate::grid::{format_number, quote_text, CellRef, CellValue, Coord, RangeRef, RefComponent};

use super::ast::{Expr, UnaryOp};
use super::{column_letters, FormulaError, Notation, MAX_A1_COL, MAX_A1_ROW};

/// How absolute components are spelled in A1 output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    /// Emit `$` before absolute components, so copies of the formula keep
    /// addressing the same cells. Without it every A1 reference is plain.
    pub dollar_absolute: bool,
}

/// Renders `expr` with a leading `=`. `anchor` is ignored for R1C1.
pub fn render(expr: &Expr, notation: Notation, anchor: Coord) -> Result<String, FormulaError> {
    render_with(expr, notation, anchor, RenderOptions::default())
}

pub fn render_with(
    expr: &Expr,
    notation: Notation,
    anchor: Coord,
    options: RenderOptions,
) -> Result<String, FormulaError> {
    let mut out = String::from("=");
    Renderer {
        notation,
        anchor,
        options,
    }
    .expr(expr, 0, &mut out)?;
    Ok(out)
}

struct Renderer {
    notation: Notation,
    anchor: Coord,
    options: RenderOptions,
}

const UNARY: u8 = 6;
const PRIMARY: u8 = 7;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(..) => UNARY,
        Expr::Literal(CellValue::Number(x)) if x.is_sign_negative() && *x != 0.0 => UNARY,
        _ => PRIMARY,
    }
}

impl Renderer {
    fn expr(&self, e: &Expr, min: u8, out: &mut String) -> Result<(), FormulaError> {
        let parens = precedence(e) < min;
        if parens {
            out.push('(');
        }
        match e {
            Expr::Literal(v) => out.push_str(&literal(v)),
            Expr::Ref(r) => self.cell(*r, out)?,
            Expr::Range(r) => self.range(*r, out)?,
            Expr::Unary(UnaryOp::Neg, inner) => {
                out.push('-');
                // `-5` would read back as the literal -5
                let min = if matches!(**inner, Expr::Literal(CellValue::Number(_))) {
                    PRIMARY + 1
                } else {
                    UNARY
                };
                self.expr(inner, min, out)?;
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                self.expr(l, p, out)?;
                out.push_str(op.symbol());
                self.expr(r, p + 1, out)?;
            }
            Expr::Call(f, args) => {
                out.push_str(f.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.expr(a, 0, out)?;
                }
                out.push(')');
            }
        }
        if parens {
            out.push(')');
        }
        Ok(())
    }

    fn cell(&self, r: CellRef, out: &mut String) -> Result<(), FormulaError> {
        match self.notation {
            Notation::R1C1 => {
                r1c1_axis('R', r.row, out);
                r1c1_axis('C', r.col, out);
            }
            Notation::A1 => {
                let row = self.a1_axis(r.row, self.anchor.row, MAX_A1_ROW, r)?;
                let col = self.a1_axis(r.col, self.anchor.col, MAX_A1_COL, r)?;
                self.dollar(r.col, out);
                out.push_str(&column_letters(col));
                self.dollar(r.row, out);
                out.push_str(&row.to_string());
            }
        }
        Ok(())
    }

    fn range(&self, r: RangeRef, out: &mut String) -> Result<(), FormulaError> {
        match (self.notation, r) {
            (_, RangeRef::Area { start, end }) => {
                self.cell(start, out)?;
                out.push(':');
                self.cell(end, out)?;
            }
            (Notation::R1C1, RangeRef::Column(c)) => r1c1_axis('C', c, out),
            (Notation::R1C1, RangeRef::Row(row)) => r1c1_axis('R', row, out),
            (Notation::A1, RangeRef::Column(c)) => {
                let probe = CellRef::new(RefComponent::Current, c);
                let n = self.a1_axis(c, self.anchor.col, MAX_A1_COL, probe)?;
                for i in 0..2 {
                    if i == 1 {
                        out.push(':');
                    }
                    self.dollar(c, out);
                    out.push_str(&column_letters(n));
                }
            }
            (Notation::A1, RangeRef::Row(row)) => {
                let probe = CellRef::new(row, RefComponent::Current);
                let n = self.a1_axis(row, self.anchor.row, MAX_A1_ROW, probe)?;
                for i in 0..2 {
                    if i == 1 {
                        out.push(':');
                    }
                    self.dollar(row, out);
                    out.push_str(&n.to_string());
                }
            }
        }
        Ok(())
    }

    fn dollar(&self, c: RefComponent, out: &mut String) {
        if self.options.dollar_absolute && matches!(c, RefComponent::Absolute(_)) {
            out.push('$');
        }
    }

    fn a1_axis(&self, c: RefComponent, anchor: u32, max: u32, r: CellRef) -> Result<u32, FormulaError> {
        let v = c.resolve(anchor);
        if v < 1 || v > i64::from(max) {
            return Err(FormulaError::Render {
                reference: format!("{r:?}"),
                anchor: self.anchor,
            });
        }
        Ok(v as u32)
    }
}

fn r1c1_axis(marker: char, c: RefComponent, out: &mut String) {
    out.push(marker);
    match c.normalized() {
        RefComponent::Absolute(n) => out.push_str(&n.to_string()),
        RefComponent::Relative(d) => out.push_str(&format!("[{d}]")),
        RefComponent::Current => {}
    }
}

fn literal(v: &CellValue) -> String {
    match v {
        CellValue::Number(x) => format_number(*x),
        CellValue::Text(s) => quote_text(s),
        other => other.literal_text(),
    }
}
