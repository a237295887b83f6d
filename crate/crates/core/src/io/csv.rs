//! CSV input. Unquoted fields are numbers when the whole field parses as a
//! finite number, text otherwise; quoted fields are always text. Empty
//! fields are NULL.

use std::path::Path;

use crate::codegen::WorksheetPlan;
use crate::grid::Workbook;
use crate::ra::{Database, Datum, Relation};
use crate::sql::TableSchema;

use super::IoError;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvField {
    pub text: String,
    pub quoted: bool,
}

impl CsvField {
    pub fn to_datum(&self) -> Datum {
        if self.text.is_empty() {
            return Datum::Null;
        }
        if !self.quoted {
            if let Ok(x) = self.text.trim().parse::<f64>() {
                if x.is_finite() {
                    return Datum::Number(x);
                }
            }
        }
        Datum::text(self.text.clone())
    }
}

/// Splits CSV text into records of fields, with 1-based line numbers.
/// Quoted fields may contain commas, doubled quotes and line breaks.
pub fn parse_csv(text: &str) -> Result<Vec<(usize, Vec<CsvField>)>, IoError> {
    let mut records = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    loop {
        if chars.peek().is_none() {
            break;
        }
        let start = line;
        let mut fields = Vec::new();
        loop {
            let mut field = CsvField {
                text: String::new(),
                quoted: false,
            };
            if chars.peek() == Some(&'"') {
                chars.next();
                field.quoted = true;
                loop {
                    match chars.next() {
                        None => return Err(IoError::malformed(start, "unterminated quoted field")),
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            field.text.push('"');
                        }
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            field.text.push(c);
                        }
                    }
                }
                match chars.peek() {
                    None | Some(',') | Some('\n') | Some('\r') => {}
                    Some(_) => return Err(IoError::malformed(line, "text after closing quote")),
                }
            } else {
                while let Some(&c) = chars.peek() {
                    if c == ',' || c == '\n' || c == '\r' {
                        break;
                    }
                    field.text.push(c);
                    chars.next();
                }
            }
            fields.push(field);
            match chars.next() {
                Some(',') => continue,
                Some('\r') => {
                    if chars.peek() == Some(&'\n') {
                        chars.next();
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                _ => break,
            }
        }
        // skip blank lines
        if fields.len() == 1 && fields[0].text.is_empty() && !fields[0].quoted {
            continue;
        }
        records.push((start, fields));
    }
    Ok(records)
}

/// Reads a table. A first record equal to the column names is a header.
pub fn read_csv_relation(text: &str, schema: &TableSchema) -> Result<Relation, IoError> {
    let mut records = parse_csv(text)?;
    if let Some((_, first)) = records.first() {
        let header = first.len() == schema.columns.len()
            && first
                .iter()
                .zip(&schema.columns)
                .all(|(f, c)| f.text.trim().eq_ignore_ascii_case(c));
        if header {
            records.remove(0);
        }
    }
    let mut rows = Vec::new();
    for (line, fields) in records {
        if fields.len() != schema.arity() {
            return Err(IoError::malformed(
                line,
                format!(
                    "table '{}' has {} columns but the record has {}",
                    schema.name,
                    schema.arity(),
                    fields.len()
                ),
            ));
        }
        rows.push(fields.iter().map(CsvField::to_datum).collect());
    }
    Ok(Relation::from_rows(schema.arity(), rows))
}

/// Reads a CSV file into the input block of `schema`'s table.
pub fn load_csv(path: &Path, schema: &TableSchema, plan: &WorksheetPlan, wb: &mut Workbook) -> Result<Relation, IoError> {
    let rel = read_csv_relation(&std::fs::read_to_string(path)?, schema)?;
    let Some(block) = plan.input(&schema.name) else {
        return Ok(rel);
    };
    let mut db = Database::new();
    db.insert(block.table.clone(), rel.clone());
    let single = WorksheetPlan {
        input_blocks: vec![block.clone()],
        op_blocks: Vec::new(),
        output_cols: Vec::new(),
        height: plan.height,
    };
    single.load(wb, &db)?;
    Ok(rel)
}
