//! Grid text format.
//!
//! ```text
//! #GRID v1 height=8 cols=16384 notation=r1c1
//! #@hidden 4,5
//! #@comment R1C4 Counts the rows of column A
//! R1C1	"departure"
//! R1C4	=COUNTA(C1)-COUNTIFS(C1,NA())
//! ```
//!
//! One stored cell per line: the address in R1C1, a tab, then either a
//! formula (`=`...) in the header's notation or a literal. Backslash, tab,
//! carriage return and newline are escaped as `\\`, `\t`, `\r`, `\n` in cell
//! content and comments. Lines starting with `#` other than `#@` are ignored.

use std::path::Path;

use crate::formula::{parse_formula, render_with, Notation, RenderOptions};
use crate::grid::{Cell, Coord, Workbook};

use super::IoError;

pub const GRID_HEADER: &str = "#GRID v1";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str, line: usize) -> Result<String, IoError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(IoError::malformed(
                    line,
                    format!("bad escape \\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

fn address(at: Coord) -> String {
    format!("R{}C{}", at.row, at.col)
}

fn parse_address(s: &str, line: usize) -> Result<Coord, IoError> {
    let bad = || IoError::malformed(line, format!("bad cell address '{s}'"));
    let rest = s.strip_prefix('R').ok_or_else(bad)?;
    let (r, c) = rest.split_once('C').ok_or_else(bad)?;
    let row: u32 = r.parse().map_err(|_| bad())?;
    let col: u32 = c.parse().map_err(|_| bad())?;
    if row == 0 || col == 0 {
        return Err(bad());
    }
    Ok(Coord::new(row, col))
}

pub fn write_grid(wb: &Workbook, notation: Notation) -> Result<String, IoError> {
    let mut out = format!(
        "{GRID_HEADER} height={} cols={} notation={notation}\n",
        wb.height(),
        wb.max_cols()
    );
    let hidden: Vec<String> = wb.hidden_columns().map(|c| c.to_string()).collect();
    if !hidden.is_empty() {
        out.push_str(&format!("#@hidden {}\n", hidden.join(",")));
    }
    for (at, text) in wb.comments() {
        out.push_str(&format!("#@comment {} {}\n", address(at), escape(text)));
    }
    let options = RenderOptions { dollar_absolute: true };
    for (at, cell) in wb.cells() {
        let content = match cell {
            Cell::Literal(v) => v.literal_text(),
            Cell::Formula(f) => render_with(f, notation, at, options)?,
        };
        out.push_str(&address(at));
        out.push('\t');
        out.push_str(&escape(&content));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_grid(text: &str) -> Result<Workbook, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| IoError::malformed(1, "empty file"))?;
    let rest = header
        .strip_prefix(GRID_HEADER)
        .ok_or_else(|| IoError::malformed(1, format!("expected '{GRID_HEADER}' header")))?;
    let mut height = None;
    let mut cols = None;
    let mut notation = Notation::R1C1;
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| IoError::malformed(1, format!("bad header field '{field}'")))?;
        let bad = |_| IoError::malformed(1, format!("bad header value '{field}'"));
        match k {
            "height" => height = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
            "cols" => cols = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
            "notation" => notation = v.parse().map_err(bad)?,
            _ => return Err(IoError::malformed(1, format!("unknown header field '{k}'"))),
        }
    }
    let height = height.ok_or_else(|| IoError::malformed(1, "header lacks height"))?;
    let mut wb = match cols {
        Some(c) => Workbook::with_max_cols(height, c),
        None => Workbook::new(height),
    }
    .map_err(|e| IoError::malformed(1, e.to_string()))?;

    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("#@") {
            let (kind, body) = meta.split_once(' ').unwrap_or((meta, ""));
            match kind {
                "hidden" => {
                    for c in body.split(',').filter(|s| !s.is_empty()) {
                        let col = c
                            .trim()
                            .parse::<u32>()
                            .map_err(|_| IoError::malformed(n, format!("bad column '{c}'")))?;
                        wb.hide_column(col);
                    }
                }
                "comment" => {
                    let (addr, text) = body.split_once(' ').unwrap_or((body, ""));
                    let at = parse_address(addr, n)?;
                    wb.set_comment(at, unescape(text, n)?)
                        .map_err(|e| IoError::malformed(n, e.to_string()))?;
                }
                other => return Err(IoError::malformed(n, format!("unknown metadata '#@{other}'"))),
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (addr, content) = line
            .split_once('\t')
            .ok_or_else(|| IoError::malformed(n, "expected <address><TAB><content>"))?;
        let at = parse_address(addr, n)?;
        let content = unescape(content, n)?;
        let expr = parse_formula(&content, notation, at).map_err(|e| IoError::malformed(n, e.to_string()))?;
        let cell = match expr {
            crate::formula::Expr::Literal(v) if !content.starts_with('=') => Cell::Literal(v),
            e => Cell::formula(e),
        };
        wb.set(at, cell).map_err(|e| IoError::malformed(n, e.to_string()))?;
    }
    Ok(wb)
}

pub fn write_grid_file(wb: &Workbook, notation: Notation, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, write_grid(wb, notation)?)?;
    Ok(())
}

pub fn read_grid_file(path: &Path) -> Result<Workbook, IoError> {
    read_grid(&std::fs::read_to_string(path)?)
}
