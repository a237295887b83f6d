//! `sqlsheet`: compile SQL queries into spreadsheet formulas, run and verify them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sqlsheet_core::codegen::{emit_plan, Fault, PlanError, WorksheetPlan};
use sqlsheet_core::eval::{evaluate_workbook, EvalError};
use sqlsheet_core::formula::Notation;
use sqlsheet_core::grid::{Workbook, DEFAULT_MAX_COLS};
use sqlsheet_core::io::{self, IoError};
use sqlsheet_core::ra::{translate, Database, Datum, RAExpr, Relation, Tuple};
use sqlsheet_core::special::{self, EdgeList, SortLayout, SpecialError};
use sqlsheet_core::sql::{parse_ddl, parse_sql, SqlError, TableSchema};
use sqlsheet_core::verify::{run_verify, VerifyConfig};

const SET_SEMANTICS: &str = "Queries use set semantics: every result is duplicate-free, \
whether or not the query says DISTINCT.";

#[derive(Parser)]
#[command(name = "sqlsheet", version, about = "Compile SQL queries into worksheets of spreadsheet formulas")]
#[command(after_help = SET_SEMANTICS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct QueryArgs {
    /// File with the SQL query
    #[arg(long)]
    sql: PathBuf,
    /// File with the CREATE TABLE statements
    #[arg(long)]
    ddl: PathBuf,
    /// Sheet height in rows
    #[arg(long, default_value_t = 256)]
    rows: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum NotationArg {
    R1c1,
    A1,
}

impl From<NotationArg> for Notation {
    fn from(n: NotationArg) -> Notation {
        match n {
            NotationArg::R1c1 => Notation::R1C1,
            NotationArg::A1 => Notation::A1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Expanded,
    Condensed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Semijoin,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a query into a worksheet (.grid or .xlsx)
    #[command(after_help = SET_SEMANTICS)]
    Compile {
        #[command(flatten)]
        query: QueryArgs,
        /// Output file; the extension selects the format
        #[arg(long)]
        out: PathBuf,
        /// Formula notation of .grid output
        #[arg(long, value_enum, default_value = "r1c1")]
        notation: NotationArg,
    },
    /// Print the relational algebra plan and the sheet layout
    Explain {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Load CSV data, evaluate the sheet and print the result as TSV
    #[command(after_help = SET_SEMANTICS)]
    Run {
        #[command(flatten)]
        query: QueryArgs,
        /// TABLE=FILE.csv, repeatable; tables without data are empty
        #[arg(long, value_name = "TABLE=CSV")]
        data: Vec<String>,
        /// Evaluate this compiled .grid file instead of a fresh compilation
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Check random queries on random data against the reference evaluator
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Sheet height in rows
        #[arg(long, default_value_t = 64)]
        rows: u32,
        /// Worker threads (default: available cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Corrupt a template on purpose
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Generate sheets for algorithms outside the SQL subset
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(clap::Args)]
struct GenOut {
    /// Output file (.grid or .xlsx)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "r1c1")]
    notation: NotationArg,
    /// Sheet height in rows (default: just large enough)
    #[arg(long)]
    rows: Option<u32>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Merge-sort network over numbers in column A
    Sort {
        /// Number of items
        #[arg(long, required_unless_present = "values")]
        n: Option<usize>,
        /// File with one number per line; the sorted values are printed
        #[arg(long)]
        values: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "expanded")]
        layout: LayoutArg,
        #[command(flatten)]
        out: GenOut,
    },
    /// Breadth-first levels over an edge list
    Bfs {
        /// CSV of source,target pairs
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        start: String,
        #[command(flatten)]
        out: GenOut,
    },
    /// Depth-first discovery order over an edge list
    Dfs {
        /// CSV of source,target pairs
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        start: String,
        #[command(flatten)]
        out: GenOut,
    },
}

enum Failure {
    User(String),
    Internal(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::User(_) => 2,
            Failure::Mismatch(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Internal(m) | Failure::Mismatch(m) => m,
        }
    }
}

impl From<SqlError> for Failure {
    fn from(e: SqlError) -> Failure {
        Failure::User(e.to_string())
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Failure {
        match e {
            PlanError::Formula { .. } | PlanError::Grid(_) => Failure::Internal(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Failure {
        match e {
            IoError::Render(_) | IoError::Grid(_) => Failure::Internal(e.to_string()),
            IoError::Plan(p) => p.into(),
            _ => Failure::User(e.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Failure {
        Failure::Internal(format!("evaluation failed: {e}"))
    }
}

impl From<SpecialError> for Failure {
    fn from(e: SpecialError) -> Failure {
        match e {
            SpecialError::Eval(EvalError::CircularReference { .. }) => {
                Failure::User(format!("{e} (the graph has a cycle the level recurrence cannot resolve)"))
            }
            SpecialError::Eval(e) => e.into(),
            SpecialError::Plan(p) => p.into(),
            SpecialError::Grid(_) => Failure::Internal(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

struct Compiled {
    schemas: Vec<TableSchema>,
    expr: RAExpr,
    plan: WorksheetPlan,
}

fn compile(q: &QueryArgs) -> Res<Compiled> {
    let schemas = parse_ddl(&read(&q.ddl)?).map_err(|e| Failure::User(format!("{}: {e}", q.ddl.display())))?;
    let query = parse_sql(&read(&q.sql)?, &schemas).map_err(|e| Failure::User(format!("{}: {e}", q.sql.display())))?;
    let expr = translate(&query, &schemas).map_err(|e| Failure::User(e.to_string()))?;
    let plan = emit_plan(&expr, &schemas, q.rows)?;
    Ok(Compiled { schemas, expr, plan })
}

fn write_sheet(wb: &Workbook, path: &Path, notation: Notation) -> Res<()> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("xlsx") => io::write_xlsx_file(wb, path)?,
        Some("grid") => io::write_grid_file(wb, notation, path)?,
        _ => {
            return Err(Failure::User(format!(
                "{}: output must end in .grid or .xlsx",
                path.display()
            )))
        }
    }
    Ok(())
}

fn cmd_compile(q: &QueryArgs, out: &Path, notation: Notation) -> Res<()> {
    let c = compile(q)?;
    let wb = c.plan.to_workbook()?;
    write_sheet(&wb, out, notation)?;
    let outs = &c.plan.output_cols;
    println!(
        "wrote {}: {} of {} columns used, height {}",
        out.display(),
        c.plan.width(),
        DEFAULT_MAX_COLS,
        c.plan.height
    );
    match (outs.first(), outs.last()) {
        (Some(a), Some(b)) => println!(
            "output columns {}:{}",
            sqlsheet_core::formula::column_letters(*a),
            sqlsheet_core::formula::column_letters(*b)
        ),
        _ => println!("no output columns"),
    }
    Ok(())
}

fn cmd_explain(q: &QueryArgs) -> Res<()> {
    let c = compile(q)?;
    println!("{}", c.expr.pretty_print());
    println!();
    print!("{}", c.plan.describe());
    Ok(())
}

fn parse_data_arg(arg: &str) -> Res<(String, PathBuf)> {
    match arg.split_once('=') {
        Some((t, p)) if !t.is_empty() && !p.is_empty() => Ok((t.to_ascii_lowercase(), PathBuf::from(p))),
        _ => Err(Failure::User(format!("--data expects TABLE=FILE, got '{arg}'"))),
    }
}

fn tsv(row: &Tuple) -> String {
    let cells: Vec<String> = row
        .iter()
        .map(|d| match d {
            Datum::Null => "NULL".to_string(),
            Datum::Number(x) => sqlsheet_core::grid::format_number(*x),
            Datum::Text(s) => s.clone(),
            Datum::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        })
        .collect();
    cells.join("\t")
}

fn cmd_run(q: &QueryArgs, data: &[String], plan_file: Option<&Path>) -> Res<()> {
    let c = compile(q)?;
    let mut db = Database::new();
    for arg in data {
        let (table, path) = parse_data_arg(arg)?;
        let schema = c
            .schemas
            .iter()
            .find(|s| s.name == table)
            .ok_or_else(|| Failure::User(format!("--data names unknown table '{table}'")))?;
        let rel = io::read_csv_relation(&read(&path)?, schema)
            .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
        db.insert(table, rel);
    }
    for b in &c.plan.input_blocks {
        db.entry(b.table.clone()).or_insert_with(|| Relation::new(b.arity));
    }
    let mut wb = match plan_file {
        None => c.plan.to_workbook()?,
        Some(path) => {
            let wb = io::read_grid_file(path)?;
            if wb != c.plan.to_workbook()? {
                return Err(Failure::User(format!(
                    "{}: the sheet does not match the query at {} rows; recompile it",
                    path.display(),
                    q.rows
                )));
            }
            wb
        }
    };
    c.plan.load(&mut wb, &db)?;
    let state = evaluate_workbook(&wb)?;
    for row in c.plan.read_rows(&state) {
        println!("{}", tsv(&row));
    }
    Ok(())
}

fn cmd_verify(cfg: VerifyConfig) -> Res<()> {
    let report = run_verify(&cfg);
    println!(
        "{} cases (seed {}, {} rows): {} passed, {} failed",
        report.cases,
        cfg.seed,
        cfg.height,
        report.passed,
        report.failed()
    );
    match report.first_failure {
        None => Ok(()),
        Some(cx) => Err(Failure::Mismatch(format!("first counterexample, minimized:\n{cx}"))),
    }
}

fn vertex(text: &str) -> Datum {
    io::CsvField {
        text: text.to_string(),
        quoted: false,
    }
    .to_datum()
}

fn read_edges(path: &Path, start: &str) -> Res<EdgeList> {
    let records = io::parse_csv(&read(path)?).map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
    let mut edges = Vec::new();
    for (line, fields) in records {
        if fields.len() != 2 {
            return Err(Failure::User(format!(
                "{}: line {line}: expected source,target",
                path.display()
            )));
        }
        edges.push((fields[0].to_datum(), fields[1].to_datum()));
    }
    Ok(EdgeList::new(edges, vertex(start)))
}

fn save(wb: &Workbook, out: &GenOut) -> Res<()> {
    if let Some(path) = &out.out {
        write_sheet(wb, path, out.notation.into())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_gen(kind: &GenKind) -> Res<()> {
    match kind {
        GenKind::Sort { n, values, layout, out } => {
            let values = match values {
                None => None,
                Some(path) => {
                    let mut v = Vec::new();
                    for (i, line) in read(path)?.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() {
                            continue;
                        }
                        let x: f64 = line.parse().map_err(|_| {
                            Failure::User(format!("{}: line {}: not a number", path.display(), i + 1))
                        })?;
                        v.push(x);
                    }
                    Some(v)
                }
            };
            let n = match (n, &values) {
                (Some(n), Some(v)) if *n != v.len() => {
                    return Err(Failure::User(format!("--n is {n} but the file has {} values", v.len())))
                }
                (Some(n), _) => *n,
                (None, Some(v)) => v.len(),
                (None, None) => unreachable!("clap requires --n or --values"),
            };
            let layout = match layout {
                LayoutArg::Expanded => SortLayout::Expanded,
                LayoutArg::Condensed => SortLayout::Condensed,
            };
            let height = out.rows.unwrap_or(n.max(1).next_power_of_two() as u32 + 1);
            let mut sheet = special::gen_merge_sort(n, layout, height)?;
            println!(
                "merge sort of {} items (padded to {}): {} levels, {} generated columns, output column {}",
                sheet.n,
                sheet.padded,
                sheet.levels,
                sheet.generated_cols(),
                sqlsheet_core::formula::column_letters(sheet.output_col)
            );
            if let Some(v) = values {
                sheet.load(&v)?;
                save(&sheet.workbook, out)?;
                let state = evaluate_workbook(&sheet.workbook)?;
                for x in sheet.read_sorted(&state) {
                    println!("{}", x.literal_text());
                }
            } else {
                save(&sheet.workbook, out)?;
            }
        }
        GenKind::Bfs { edges, start, out } => {
            let sheet = special::gen_bfs(&read_edges(edges, start)?, out.rows)?;
            save(&sheet.workbook, out)?;
            let state = sheet.evaluate()?;
            for (v, level) in sheet.order(&state) {
                println!("{}", tsv(&vec![v, Datum::Number(level)]));
            }
        }
        GenKind::Dfs { edges, start, out } => {
            let sheet = special::gen_dfs(&read_edges(edges, start)?, out.rows)?;
            save(&sheet.workbook, out)?;
            let state = sheet.evaluate()?;
            for v in sheet.order(&state) {
                println!("{}", tsv(&vec![v]));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile { query, out, notation } => cmd_compile(query, out, (*notation).into()),
        Command::Explain { query } => cmd_explain(query),
        Command::Run { query, data, plan } => cmd_run(query, data, plan.as_deref()),
        Command::Verify {
            seed,
            cases,
            rows,
            threads,
            inject_fault,
        } => {
            let mut cfg = VerifyConfig {
                seed: *seed,
                cases: *cases,
                height: *rows,
                fault: inject_fault.map(|FaultArg::Semijoin| Fault::SemijoinKeepsAll),
                ..VerifyConfig::default()
            };
            if let Some(t) = threads {
                cfg.threads = *t;
            }
            cmd_verify(cfg)
        }
        Command::Gen { kind } => cmd_gen(kind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sqlsheet: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
