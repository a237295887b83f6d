//! Differential testing: random schemas, data and queries are compiled to
//! worksheets, evaluated, and compared with the relational oracle.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codegen::{emit_plan, emit_plan_faulty, run_plan, Fault};
use crate::ra::{oracle_eval, translate, Database, Datum, Relation, Tuple};
use crate::sql::{parse_ddl, parse_sql, TableSchema};

mod gen;

pub use gen::gen_case;

/// One (query, database) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub ddl: String,
    pub sql: String,
    pub db: Database,
}

impl Case {
    pub fn schemas(&self) -> Vec<TableSchema> {
        parse_ddl(&self.ddl).expect("generated DDL parses")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Mismatch { sheet: Relation, oracle: Relation },
    /// The pipeline failed where the oracle succeeded.
    Failed(String),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub cases: usize,
    pub height: u32,
    pub fault: Option<Fault>,
    pub threads: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 1,
            cases: 100,
            height: 64,
            fault: None,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub index: usize,
    pub case: Case,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub cases: usize,
    pub passed: usize,
    /// The lowest-numbered failing case, minimized by row deletion.
    pub first_failure: Option<Counterexample>,
}

impl VerifyReport {
    pub fn failed(&self) -> usize {
        self.cases - self.passed
    }
}

/// Compiles, evaluates and compares one case.
pub fn check_case(case: &Case, height: u32, fault: Option<Fault>) -> Result<Outcome, String> {
    let schemas = parse_ddl(&case.ddl).map_err(|e| format!("ddl: {e}"))?;
    let q = parse_sql(&case.sql, &schemas).map_err(|e| format!("sql: {e}"))?;
    let e = translate(&q, &schemas).map_err(|e| format!("translate: {e}"))?;
    let oracle = oracle_eval(&e, &case.db).map_err(|e| format!("oracle: {e}"))?;
    let plan = match fault {
        None => emit_plan(&e, &schemas, height),
        Some(f) => emit_plan_faulty(&e, &schemas, height, f),
    };
    let plan = match plan {
        Ok(p) => p,
        Err(err) => return Ok(Outcome::Failed(format!("emit: {err}"))),
    };
    let rows = match run_plan(&plan, &case.db) {
        Ok(r) => r,
        Err(err) => return Ok(Outcome::Failed(format!("evaluate: {err}"))),
    };
    let sheet = Relation::from_rows(oracle.arity, rows);
    if sheet.same_set(&oracle) {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::Mismatch { sheet, oracle })
    }
}

/// Deletes rows while the case keeps failing.
pub fn minimize(case: &Case, height: u32, fault: Option<Fault>) -> (Case, Outcome) {
    let mut best = case.clone();
    let mut outcome = match check_case(&best, height, fault) {
        Ok(o) if !o.passed() => o,
        Ok(o) => return (best, o),
        Err(e) => return (best, Outcome::Failed(e)),
    };
    loop {
        let mut shrunk = false;
        let names: Vec<String> = best.db.keys().cloned().collect();
        for name in names {
            let mut i = 0;
            while i < best.db[&name].len() {
                let mut trial = best.clone();
                let rel = trial.db.get_mut(&name).unwrap();
                rel.rows.remove(i);
                match check_case(&trial, height, fault) {
                    Ok(o) if !o.passed() => {
                        best = trial;
                        outcome = o;
                        shrunk = true;
                    }
                    _ => i += 1,
                }
            }
        }
        if !shrunk {
            return (best, outcome);
        }
    }
}

fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// The `index`-th case of a seeded run.
pub fn nth_case(seed: u64, index: usize, height: u32) -> Case {
    gen_case(&mut case_rng(seed, index), height)
}

/// Runs `cfg.cases` generated cases, spread over `cfg.threads` workers.
pub fn run_verify(cfg: &VerifyConfig) -> VerifyReport {
    let threads = cfg.threads.clamp(1, cfg.cases.max(1));
    let mut results: Vec<(usize, Case, Outcome)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for i in (t..cfg.cases).step_by(threads) {
                        let case = nth_case(cfg.seed, i, cfg.height);
                        let outcome = check_case(&case, cfg.height, cfg.fault).unwrap_or_else(Outcome::Failed);
                        if !outcome.passed() {
                            out.push((i, case, outcome));
                        }
                    }
                    out
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("verify worker panicked")).collect()
    });
    results.sort_by_key(|r| r.0);
    let failures = results.len();
    let first_failure = results.into_iter().next().map(|(index, case, _)| {
        let (case, outcome) = minimize(&case, cfg.height, cfg.fault);
        Counterexample { index, case, outcome }
    });
    VerifyReport {
        cases: cfg.cases,
        passed: cfg.cases - failures,
        first_failure,
    }
}

fn write_rows(f: &mut fmt::Formatter<'_>, rows: &[Tuple]) -> fmt::Result {
    if rows.is_empty() {
        return writeln!(f, "    (empty)");
    }
    for r in rows {
        let cells: Vec<String> = r.iter().map(Datum::to_string).collect();
        writeln!(f, "    {}", cells.join(", "))?;
    }
    Ok(())
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case {}", self.index)?;
        writeln!(f, "ddl: {}", self.case.ddl)?;
        writeln!(f, "sql: {}", self.case.sql)?;
        for (name, rel) in &self.case.db {
            writeln!(f, "table {name}:")?;
            write_rows(f, &rel.rows)?;
        }
        match &self.outcome {
            Outcome::Pass => writeln!(f, "passes"),
            Outcome::Failed(msg) => writeln!(f, "sheet failed: {msg}"),
            Outcome::Mismatch { sheet, oracle } => {
                writeln!(f, "sheet:")?;
                write_rows(f, &sheet.rows)?;
                writeln!(f, "oracle:")?;
                write_rows(f, &oracle.rows)
            }
        }
    }
}

/// Random rows for a schema: up to six, about 15% NULL cells.
fn gen_rows(rng: &mut impl Rng, types: &[gen::Ty]) -> Vec<Tuple> {
    let n = if rng.random_bool(0.1) { 0 } else { rng.random_range(1..=6) };
    (0..n)
        .map(|_| {
            types
                .iter()
                .map(|t| {
                    if rng.random_bool(0.15) {
                        Datum::Null
                    } else {
                        t.value(rng)
                    }
                })
                .collect()
        })
        .collect()
}

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("nonempty choice")
}
