//! SQL to spreadsheet-formula compiler with an embedded formula evaluator and
//! a relational reference evaluator.

pub mod formula;
pub mod grid;
pub mod eval;
pub mod sql;
pub mod ra;
pub mod codegen;
pub mod special;
pub mod verify;
pub mod io;
