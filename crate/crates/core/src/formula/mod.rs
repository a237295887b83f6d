//! Formula syntax: AST, parser, renderers for A1 and R1C1, and fill-down.

mod ast;
mod parse;
mod render;

use std::sync::Arc;

pub use ast::{BinaryOp, Expr, Function, UnaryOp};
pub use parse::{parse_formula, parse_literal};
pub use render::{render, render_with, RenderOptions};

use crate::grid::Coord;

pub(crate) const MAX_A1_COL: u32 = 16_384;
pub(crate) const MAX_A1_ROW: u32 = 1_048_576;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Notation {
    A1,
    #[default]
    R1C1,
}

impl std::str::FromStr for Notation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Ok(Notation::A1),
            "r1c1" => Ok(Notation::R1C1),
            other => Err(format!("unknown notation '{other}' (expected a1 or r1c1)")),
        }
    }
}

impl std::fmt::Display for Notation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Notation::A1 => "a1",
            Notation::R1C1 => "r1c1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{function} does not take {count} arguments")]
    Arity { function: String, count: usize },
    #[error("reference {reference} falls outside the sheet when rendered at {anchor}")]
    Render { reference: String, anchor: Coord },
    #[error("fill-down to row {row} exceeds the sheet height {height}")]
    Bounds { row: u32, height: u32 },
}

impl FormulaError {
    fn shifted(self, by: usize) -> FormulaError {
        match self {
            FormulaError::Syntax { position, message } => FormulaError::Syntax {
                position: position + by,
                message,
            },
            other => other,
        }
    }
}

/// `1 → A`, `27 → AA`.
pub fn column_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii letters")
}

/// Inverse of [`column_letters`]; case-insensitive, at most three letters.
pub fn column_index(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut n: u32 = 0;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        n = n * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1);
    }
    (n <= MAX_A1_COL).then_some(n)
}

/// Copies a row template into rows `from_row..=to_row`.
///
/// Formulas are stored in R1C1 form, so every target row receives the same
/// expression; relative references resolve against the row they land in.
pub fn fill_down(
    template: &[(u32, Arc<Expr>)],
    from_row: u32,
    to_row: u32,
    height: u32,
) -> Result<Vec<(Coord, Arc<Expr>)>, FormulaError> {
    if template.is_empty() || to_row < from_row {
        return Ok(Vec::new());
    }
    if to_row > height {
        return Err(FormulaError::Bounds { row: to_row, height });
    }
    let mut writes = Vec::with_capacity(template.len() * (to_row - from_row + 1) as usize);
    for row in from_row..=to_row {
        for (col, expr) in template {
            writes.push((Coord::new(row, *col), Arc::clone(expr)));
        }
    }
    Ok(writes)
}
