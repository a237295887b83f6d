//! Hand-built worksheets beyond the SQL translator: a merge-sort network and
//! BFS/DFS traversals of edge lists.

mod graph;
mod merge_sort;

pub use graph::{gen_bfs, gen_dfs, BfsSheet, DfsSheet, EdgeList, INFINITE_LEVEL};
pub use merge_sort::{gen_merge_sort, MergeSortSheet, SortLayout, SENTINEL};

use crate::codegen::PlanError;
use crate::eval::EvalError;
use crate::formula::{parse_formula, Expr, Notation};
use crate::grid::{Coord, GridError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecialError {
    #[error("{needed} rows are needed but the sheet has {height}")]
    Bounds { needed: u32, height: u32 },
    #[error("vertex values must be numbers or text")]
    BadVertex,
    #[error("{0}")]
    Grid(#[from] GridError),
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

fn r1c1(text: &str, at: Coord) -> Expr {
    parse_formula(text, Notation::R1C1, at).unwrap_or_else(|e| panic!("generated formula {text}: {e}"))
}

#[cfg(test)]
mod tests;
