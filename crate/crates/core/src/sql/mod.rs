//! SQL subset: DDL schemas and queries, parsed and resolved against schemas.

mod ast;
mod lexer;
mod parser;
mod print;
mod resolve;

pub use ast::*;
pub use print::print_query;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown table '{0}'")]
    UnknownTable(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("ambiguous column '{0}'")]
    AmbiguousColumn(String),
    #[error("duplicate table '{0}'")]
    DuplicateTable(String),
    #[error("duplicate column '{column}' in table '{table}'")]
    DuplicateColumn { table: String, column: String },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("invalid query: {0}")]
    Invalid(String),
}

impl SqlError {
    pub(crate) fn syntax(line: usize, col: usize, message: impl Into<String>) -> SqlError {
        SqlError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }
}

/// Parses `CREATE TABLE` statements. Column types are kept only as hints.
pub fn parse_ddl(text: &str) -> Result<Vec<TableSchema>, SqlError> {
    parser::Parser::new(text)?.ddl()
}

/// Parses a query and binds every column reference to a FROM item and ordinal.
pub fn parse_sql(text: &str, schemas: &[TableSchema]) -> Result<Query, SqlError> {
    let mut q = parser::Parser::new(text)?.statement()?;
    resolve::resolve_query(&mut q, schemas)?;
    Ok(q)
}

/// Column names of a resolved query's output, in order. Unnamed
/// expressions get `column<n>`.
pub fn output_columns(q: &Query, schemas: &[TableSchema]) -> Vec<String> {
    resolve::output_names(&q.body, schemas)
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.unwrap_or_else(|| format!("column{}", i + 1)))
        .collect()
}
