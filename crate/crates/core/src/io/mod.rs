//! Serialization: a line-based grid text format, XLSX packages and CSV input.

mod csv;
mod grid_text;
mod xlsx;

pub use csv::{load_csv, parse_csv, read_csv_relation, CsvField};
pub use grid_text::{read_grid, read_grid_file, write_grid, write_grid_file, GRID_HEADER};
pub use xlsx::{validate_xlsx, write_xlsx, write_xlsx_file, XlsxSummary};

use crate::codegen::PlanError;
use crate::formula::FormulaError;
use crate::grid::GridError;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Render(#[from] FormulaError),
    #[error("{0}")]
    Grid(#[from] GridError),
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("zip: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("invalid package: {0}")]
    Package(String),
}

impl IoError {
    fn malformed(line: usize, message: impl Into<String>) -> IoError {
        IoError::Malformed {
            line,
            message: message.into(),
        }
    }
}
