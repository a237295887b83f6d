use std::path::PathBuf;
use std::process::{Command, Output};

use sqlsheet_core::io::{read_grid_file, validate_xlsx};
use sqlsheet_core::ra::{oracle_eval, translate, Database, Datum, Relation};
use sqlsheet_core::sql::{parse_ddl, parse_sql};

fn sqlsheet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqlsheet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Files {
    dir: tempfile::TempDir,
}

impl Files {
    fn new() -> Files {
        Files {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn put(&self, name: &str, text: &str) -> String {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

const DDL: &str = "CREATE TABLE connections (departure TEXT, arrival TEXT, length INT);";
const QUERY: &str = "SELECT t1.departure, t2.arrival FROM connections t1 \
    JOIN connections t2 ON t1.arrival = t2.departure \
    EXCEPT SELECT departure, arrival FROM connections";

fn lines(o: &Output) -> Vec<String> {
    let mut v: Vec<String> = stdout(o).lines().map(str::to_string).collect();
    v.sort();
    v
}

#[test]
fn compile_writes_grid_and_xlsx() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let sql = f.put("q.sql", QUERY);
    let grid = f.path("plan.grid");
    let o = sqlsheet(&["compile", "--sql", &sql, "--ddl", &ddl, "--out", grid.to_str().unwrap(), "--rows", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("columns used"));
    assert!(stdout(&o).contains("output columns"));
    let wb = read_grid_file(&grid).unwrap();
    assert_eq!(wb.height(), 32);

    let xlsx = f.path("plan.xlsx");
    let o = sqlsheet(&["compile", "--sql", &sql, "--ddl", &ddl, "--out", xlsx.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    validate_xlsx(&std::fs::read(&xlsx).unwrap()).unwrap();

    let o = sqlsheet(&["compile", "--sql", &sql, "--ddl", &ddl, "--out", f.path("plan.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compile_a1_notation() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let sql = f.put("q.sql", "SELECT departure FROM connections WHERE TRUE");
    let grid = f.path("plan.grid");
    let o = sqlsheet(&[
        "compile", "--sql", &sql, "--ddl", &ddl, "--out", grid.to_str().unwrap(), "--notation", "a1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&grid).unwrap();
    assert!(text.starts_with("#GRID v1") && text.contains("notation=a1"));
    assert!(text.contains('$'));
}

#[test]
fn where_true_is_a_pass_through() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let sql = f.put("q.sql", "SELECT * FROM connections WHERE TRUE");
    let o = sqlsheet(&["explain", "--sql", &sql, "--ddl", &ddl]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("Select"), "{}", stdout(&o));
    let data = f.put("c.csv", "a,b,1\nb,,2\n");
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={data}")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(lines(&o), vec!["a\tb\t1", "b\tNULL\t2"]);
}

#[test]
fn run_connections() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let sql = f.put("q.sql", QUERY);
    let data = f.put("c.csv", "departure,arrival,length\nA,B,1\nB,C,1\nB,D,1\nC,E,1\n");
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={data}")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(lines(&o), vec!["A\tC", "A\tD", "B\tE"]);

    // the same through a compiled plan file
    let grid = f.path("plan.grid");
    let grid = grid.to_str().unwrap();
    assert!(sqlsheet(&["compile", "--sql", &sql, "--ddl", &ddl, "--out", grid]).status.success());
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={data}"), "--plan", grid]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(lines(&o), vec!["A\tC", "A\tD", "B\tE"]);
    let o = sqlsheet(&[
        "run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={data}"), "--plan", grid, "--rows", "40",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("recompile"));
}

#[test]
fn run_with_empty_data() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let sql = f.put("q.sql", QUERY);
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    let empty = f.put("c.csv", "");
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={empty}")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}

#[test]
fn run_atm_group_by_matches_oracle() {
    let f = Files::new();
    let ddl_text = "CREATE TABLE Transactions (Trans_id INT, Address TEXT, Trans_type TEXT, Amount INT)";
    let sql_text = "SELECT Address, count(Amount) FROM Transactions \
        WHERE Trans_type='ATM withdrawal' GROUP BY Address";
    let ddl = f.put("ddl.sql", ddl_text);
    let sql = f.put("q.sql", sql_text);
    let mut csv = String::new();
    let mut rows = Vec::new();
    let addresses = ["Main St 1", "Station Sq", "Harbour 7"];
    let types = ["ATM withdrawal", "card payment", "ATM withdrawal", "transfer"];
    for i in 0..24 {
        let addr = addresses[(i * 7) % 3];
        let ty = types[(i * 5) % 4];
        let amount = if i % 6 == 5 { None } else { Some(((i * 37) % 200) as f64) };
        csv.push_str(&format!(
            "{i},{addr},{ty},{}\n",
            amount.map(|a| a.to_string()).unwrap_or_default()
        ));
        rows.push(vec![
            Datum::Number(i as f64),
            Datum::text(addr),
            Datum::text(ty),
            amount.map_or(Datum::Null, Datum::Number),
        ]);
    }
    let data = f.put("t.csv", &csv);
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("transactions={data}")]);
    assert!(o.status.success(), "{}", stderr(&o));

    let schemas = parse_ddl(ddl_text).unwrap();
    let e = translate(&parse_sql(sql_text, &schemas).unwrap(), &schemas).unwrap();
    let db: Database = [("transactions".to_string(), Relation::from_rows(4, rows))].into();
    let mut want: Vec<String> = oracle_eval(&e, &db)
        .unwrap()
        .rows
        .iter()
        .map(|r| match (&r[0], &r[1]) {
            (Datum::Text(a), Datum::Number(n)) => format!("{a}\t{n}"),
            other => panic!("{other:?}"),
        })
        .collect();
    want.sort();
    assert!(!want.is_empty());
    assert_eq!(lines(&o), want);
}

#[test]
fn input_errors_exit_2() {
    let f = Files::new();
    let ddl = f.put("ddl.sql", DDL);
    let correlated = f.put(
        "c.sql",
        "SELECT departure FROM connections c WHERE length IN \
         (SELECT length FROM connections d WHERE d.arrival = c.departure)",
    );
    let o = sqlsheet(&["compile", "--sql", &correlated, "--ddl", &ddl, "--out", f.path("x.grid").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("correlated subquery"), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");

    let bad = f.put("b.sql", "SELECT FROM");
    let o = sqlsheet(&["explain", "--sql", &bad, "--ddl", &ddl]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax error"));

    let sql = f.put("q.sql", QUERY);
    let arity = f.put("d.csv", "a,b\n");
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", &format!("connections={arity}")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--data", "nosuch=x.csv"]);
    assert_eq!(o.status.code(), Some(2));

    let many: String = (0..10).map(|i| format!("x{i},y{i},1\n")).collect();
    let many = f.put("m.csv", &many);
    let o = sqlsheet(&["run", "--sql", &sql, "--ddl", &ddl, "--rows", "8", "--data", &format!("connections={many}")]);
    assert_eq!(o.status.code(), Some(2));

    // missing required flags
    let o = sqlsheet(&["compile", "--sql", &sql]);
    assert_eq!(o.status.code(), Some(2));
    let o = sqlsheet(&["run", "--sql", "/nonexistent.sql", "--ddl", &ddl]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports() {
    let o = sqlsheet(&["verify", "--seed", "1", "--cases", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("100 passed, 0 failed"));

    let o = sqlsheet(&["verify", "--cases", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 passed, 0 failed"));

    let a = sqlsheet(&["verify", "--seed", "4", "--cases", "40", "--inject-fault", "semijoin", "--threads", "1"]);
    let b = sqlsheet(&["verify", "--seed", "4", "--cases", "40", "--inject-fault", "semijoin", "--threads", "3"]);
    assert_eq!(a.status.code(), Some(3));
    let err = stderr(&a);
    assert!(err.contains("sql: ") && err.contains("sheet:") && err.contains("oracle:"), "{err}");
    assert_eq!((stdout(&a), err), (stdout(&b), stderr(&b)));
}

fn edges(f: &Files) -> String {
    f.put("e.csv", "a,b\na,c\nb,d\nc,d\nd,e\n")
}

#[test]
fn gen_bfs_and_dfs() {
    let f = Files::new();
    let e = edges(&f);
    let out = f.path("bfs.grid");
    let o = sqlsheet(&["gen", "bfs", "--edges", &e, "--start", "a", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("a\t0\nb\t1\nc\t1\nd\t2\ne\t3\n"), "{}", stdout(&o));
    assert!(read_grid_file(&out).is_ok());

    let out = f.path("dfs.xlsx");
    let o = sqlsheet(&["gen", "dfs", "--edges", &e, "--start", "a", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).ends_with("a\nb\nd\ne\nc\n"), "{}", stdout(&o));
    validate_xlsx(&std::fs::read(&out).unwrap()).unwrap();

    let cyclic = f.put("cyc.csv", "a,b\nb,c\nc,b\n");
    let o = sqlsheet(&["gen", "bfs", "--edges", &cyclic, "--start", "a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("circular reference"), "{}", stderr(&o));

    let bad = f.put("bad.csv", "a,b,c\n");
    assert_eq!(sqlsheet(&["gen", "dfs", "--edges", &bad, "--start", "a"]).status.code(), Some(2));
}

#[test]
fn gen_sort() {
    let f = Files::new();
    let values = f.put("v.txt", "5\n-2\n9\n0.5\n5\n");
    for layout in ["expanded", "condensed"] {
        let o = sqlsheet(&["gen", "sort", "--values", &values, "--layout", layout]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).ends_with("-2\n0.5\n5\n5\n9\n"), "{}", stdout(&o));
    }
    let out = f.path("s.grid");
    let o = sqlsheet(&["gen", "sort", "--n", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("36 generated columns"));
    let o = sqlsheet(&["gen", "sort", "--n", "8", "--rows", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = sqlsheet(&["gen", "sort", "--n", "3", "--values", &values]);
    assert_eq!(o.status.code(), Some(2));
}
