//! Random cases. Queries are produced as SQL text so that the parser and
//! translator are exercised along with the sheet generator.

use rand::Rng;

use crate::codegen::required_height;
use crate::ra::{translate, Database, Datum, Relation};
use crate::sql::{parse_ddl, parse_sql};

use super::{gen_rows, pick, Case};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Ty {
    Num,
    Text,
}

const TEXTS: [&str; 4] = ["a", "b", "c", "ab"];

impl Ty {
    pub(super) fn value(self, rng: &mut impl Rng) -> Datum {
        match self {
            Ty::Num => Datum::Number(if rng.random_bool(0.1) { 1.5 } else { rng.random_range(0..4) as f64 }),
            Ty::Text => Datum::text(*pick(rng, &TEXTS)),
        }
    }

    fn literal(self, rng: &mut impl Rng) -> String {
        match self {
            Ty::Num => rng.random_range(0..4).to_string(),
            Ty::Text => format!("'{}'", pick(rng, &TEXTS)),
        }
    }

    fn ddl(self) -> &'static str {
        match self {
            Ty::Num => "INT",
            Ty::Text => "TEXT",
        }
    }
}

#[derive(Debug, Clone)]
struct Table {
    name: String,
    cols: Vec<(String, Ty)>,
}

/// Columns visible in a FROM clause, qualified by alias.
#[derive(Debug, Clone, Default)]
struct Scope {
    cols: Vec<(String, Ty)>,
}

impl Scope {
    fn of(tables: &[(&Table, &str)]) -> Scope {
        let mut cols = Vec::new();
        for (t, alias) in tables {
            for (c, ty) in &t.cols {
                cols.push((format!("{alias}.{c}"), *ty));
            }
        }
        Scope { cols }
    }

    fn column(&self, rng: &mut impl Rng, ty: Option<Ty>) -> Option<(String, Ty)> {
        let c: Vec<&(String, Ty)> = self.cols.iter().filter(|(_, t)| ty.is_none_or(|ty| *t == ty)).collect();
        if c.is_empty() {
            None
        } else {
            Some((*pick(rng, &c)).clone())
        }
    }

    fn any(&self, rng: &mut impl Rng) -> (String, Ty) {
        self.column(rng, None).expect("scopes have columns")
    }
}

const CMPS: [&str; 6] = ["=", "<>", "<", "<=", ">", ">="];

fn gen_tables(rng: &mut impl Rng) -> Vec<Table> {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|i| {
            let arity = rng.random_range(1..=4);
            let cols = (0..arity)
                .map(|j| {
                    let ty = if rng.random_bool(0.6) { Ty::Num } else { Ty::Text };
                    (format!("c{}", j + 1), ty)
                })
                .collect();
            Table {
                name: format!("t{}", i + 1),
                cols,
            }
        })
        .collect()
}

fn ddl(tables: &[Table]) -> String {
    let parts: Vec<String> = tables
        .iter()
        .map(|t| {
            let cols: Vec<String> = t.cols.iter().map(|(c, ty)| format!("{c} {}", ty.ddl())).collect();
            format!("CREATE TABLE {} ({});", t.name, cols.join(", "))
        })
        .collect();
    parts.join(" ")
}

struct QueryGen<'a, R> {
    rng: &'a mut R,
    tables: &'a [Table],
}

impl<R: Rng> QueryGen<'_, R> {
    fn table(&mut self) -> &Table {
        let i = self.rng.random_range(0..self.tables.len());
        &self.tables[i]
    }

    fn atom(&mut self, scope: &Scope) -> String {
        let (c, ty) = scope.any(self.rng);
        match self.rng.random_range(0..10) {
            0..=3 => format!("{c} {} {}", pick(self.rng, &CMPS), ty.literal(self.rng)),
            4 | 5 => match scope.column(self.rng, Some(ty)) {
                Some((d, _)) => format!("{c} {} {d}", pick(self.rng, &CMPS)),
                None => format!("{c} IS NULL"),
            },
            6 => format!("{c} IS {}NULL", if self.rng.random_bool(0.5) { "NOT " } else { "" }),
            7 => format!(
                "{c} {}IN ({}, {})",
                if self.rng.random_bool(0.3) { "NOT " } else { "" },
                ty.literal(self.rng),
                ty.literal(self.rng)
            ),
            _ => match scope.column(self.rng, Some(Ty::Num)) {
                Some((n, _)) => format!(
                    "{n} {} {} {}",
                    pick(self.rng, &["+", "-", "*"]),
                    Ty::Num.literal(self.rng),
                    pick(self.rng, &CMPS)
                ) + &format!(" {}", Ty::Num.literal(self.rng)),
                None => format!("{c} = {c}"),
            },
        }
    }

    fn predicate(&mut self, scope: &Scope, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.5) {
            return self.atom(scope);
        }
        match self.rng.random_range(0..5) {
            0 | 1 => format!("({} AND {})", self.predicate(scope, depth - 1), self.predicate(scope, depth - 1)),
            2 | 3 => format!("({} OR {})", self.predicate(scope, depth - 1), self.predicate(scope, depth - 1)),
            _ => format!("NOT ({})", self.predicate(scope, depth - 1)),
        }
    }

    fn where_clause(&mut self, scope: &Scope) -> String {
        if self.rng.random_bool(0.6) {
            format!(" WHERE {}", self.predicate(scope, 2))
        } else {
            String::new()
        }
    }

    /// A select item of the given type, or of any type.
    fn item(&mut self, scope: &Scope, ty: Option<Ty>) -> (String, Ty) {
        let roll = self.rng.random_range(0..10);
        if roll < 7 {
            if let Some(c) = scope.column(self.rng, ty) {
                return c;
            }
        } else if roll < 9 && ty != Some(Ty::Text) {
            if let Some((c, _)) = scope.column(self.rng, Some(Ty::Num)) {
                let e = match self.rng.random_range(0..4) {
                    0 => format!("{c} + {}", Ty::Num.literal(self.rng)),
                    1 => format!("{c} * 2"),
                    2 => format!("{c} / 2"),
                    _ => match scope.column(self.rng, Some(Ty::Num)) {
                        Some((d, _)) => format!("{c} - {d}"),
                        None => format!("-{c}"),
                    },
                };
                return (e, Ty::Num);
            }
        }
        let ty = ty.unwrap_or(Ty::Num);
        (ty.literal(self.rng), ty)
    }

    fn items(&mut self, scope: &Scope, types: Option<&[Ty]>) -> (String, Vec<Ty>) {
        let n = types.map_or_else(|| self.rng.random_range(1..=3), <[Ty]>::len);
        let mut texts = Vec::new();
        let mut tys = Vec::new();
        for i in 0..n {
            let (t, ty) = self.item(scope, types.map(|t| t[i]));
            texts.push(t);
            tys.push(ty);
        }
        (texts.join(", "), tys)
    }

    fn distinct(&mut self) -> &'static str {
        if self.rng.random_bool(0.3) {
            "DISTINCT "
        } else {
            ""
        }
    }

    /// A single-table query; `types` fixes the select list types.
    fn simple(&mut self, types: Option<&[Ty]>) -> (String, Vec<Ty>) {
        let t = self.table().clone();
        let scope = Scope::of(&[(&t, "x")]);
        if types.is_none() && self.rng.random_bool(0.15) {
            let w = self.where_clause(&scope);
            return (
                format!("SELECT * FROM {} x{w}", t.name),
                t.cols.iter().map(|c| c.1).collect(),
            );
        }
        let (items, tys) = self.items(&scope, types);
        let d = self.distinct();
        let w = self.where_clause(&scope);
        (format!("SELECT {d}{items} FROM {} x{w}", t.name), tys)
    }

    fn two_tables(&mut self) -> (Table, Table) {
        (self.table().clone(), self.table().clone())
    }

    fn join(&mut self) -> String {
        let (a, b) = self.two_tables();
        let sa = Scope::of(&[(&a, "x")]);
        let sb = Scope::of(&[(&b, "y")]);
        let (l, ty) = sa.any(self.rng);
        let scope = Scope::of(&[(&a, "x"), (&b, "y")]);
        let (items, _) = self.items(&scope, None);
        let w = self.where_clause(&scope);
        match sb.column(self.rng, Some(ty)) {
            Some((r, _)) => format!("SELECT {items} FROM {} x JOIN {} y ON {l} = {r}{w}", a.name, b.name),
            None => format!("SELECT {items} FROM {} x, {} y{w}", a.name, b.name),
        }
    }

    fn product(&mut self) -> String {
        let (a, b) = self.two_tables();
        let scope = Scope::of(&[(&a, "x"), (&b, "y")]);
        let (items, _) = self.items(&scope, None);
        let d = self.distinct();
        let w = self.where_clause(&scope);
        format!("SELECT {d}{items} FROM {} x, {} y{w}", a.name, b.name)
    }

    fn set_op(&mut self) -> String {
        let (left, tys) = self.simple(None);
        let (right, _) = self.simple(Some(&tys));
        let op = pick(self.rng, &["UNION", "EXCEPT", "INTERSECT"]);
        format!("{left} {op} {right}")
    }

    fn subquery(&mut self) -> String {
        let t = self.table().clone();
        let scope = Scope::of(&[(&t, "x")]);
        let (items, _) = self.items(&scope, None);
        let u = self.table().clone();
        let inner = Scope::of(&[(&u, "y")]);
        let iw = self.where_clause(&inner);
        let cond = if self.rng.random_bool(0.6) {
            let (c, ty) = scope.any(self.rng);
            let (sub, _) = self.item(&inner, Some(ty));
            let not = if self.rng.random_bool(0.4) { "NOT " } else { "" };
            format!("{c} {not}IN (SELECT {sub} FROM {} y{iw})", u.name)
        } else {
            let not = if self.rng.random_bool(0.4) { "NOT " } else { "" };
            format!("{not}EXISTS (SELECT * FROM {} y{iw})", u.name)
        };
        let cond = if self.rng.random_bool(0.3) {
            format!("{cond} AND {}", self.atom(&scope))
        } else {
            cond
        };
        format!("SELECT {items} FROM {} x WHERE {cond}", t.name)
    }

    fn aggregate(&mut self, scope: &Scope) -> String {
        let num = scope.column(self.rng, Some(Ty::Num));
        let (c, _) = scope.any(self.rng);
        match (self.rng.random_range(0..7), num) {
            (0, _) => "COUNT(*)".to_string(),
            (1, _) => format!("COUNT({c})"),
            (2, _) => format!("COUNT(DISTINCT {c})"),
            (3, Some((n, _))) => format!("SUM({n})"),
            (4, Some((n, _))) => format!("AVG({n})"),
            (5, Some((n, _))) => format!("MIN({n})"),
            (6, Some((n, _))) => format!("MAX({n})"),
            _ => "COUNT(*)".to_string(),
        }
    }

    fn group(&mut self) -> String {
        let (from, scope) = if self.rng.random_bool(0.25) {
            let (a, b) = self.two_tables();
            let scope = Scope::of(&[(&a, "x"), (&b, "y")]);
            let sa = Scope::of(&[(&a, "x")]);
            let sb = Scope::of(&[(&b, "y")]);
            let (l, ty) = sa.any(self.rng);
            match sb.column(self.rng, Some(ty)) {
                Some((r, _)) => (format!("{} x JOIN {} y ON {l} = {r}", a.name, b.name), scope),
                None => (format!("{} x, {} y", a.name, b.name), scope),
            }
        } else {
            let t = self.table().clone();
            (format!("{} x", t.name), Scope::of(&[(&t, "x")]))
        };
        let ngroup = self.rng.random_range(0..=2).min(scope.cols.len());
        let mut keys: Vec<String> = Vec::new();
        for _ in 0..ngroup {
            let (c, _) = scope.any(self.rng);
            if !keys.contains(&c) {
                keys.push(c);
            }
        }
        let naggs = self.rng.random_range(1..=2);
        let aggs: Vec<String> = (0..naggs).map(|_| self.aggregate(&scope)).collect();
        let mut items = keys.clone();
        items.extend(aggs);
        let w = self.where_clause(&scope);
        let g = if keys.is_empty() {
            String::new()
        } else {
            format!(" GROUP BY {}", keys.join(", "))
        };
        format!("SELECT {} FROM {from}{w}{g}", items.join(", "))
    }

    fn query(&mut self) -> String {
        let q = match self.rng.random_range(0..8) {
            0 | 1 => self.simple(None).0,
            2 => self.join(),
            3 => self.product(),
            4 => self.set_op(),
            5 => self.subquery(),
            _ => self.group(),
        };
        if self.rng.random_bool(0.2) {
            let dir = if self.rng.random_bool(0.5) { " DESC" } else { "" };
            format!("{q} ORDER BY 1{dir}")
        } else {
            q
        }
    }
}

fn fits(case: &Case, height: u32) -> bool {
    let Ok(schemas) = parse_ddl(&case.ddl) else {
        return true;
    };
    let Ok(q) = parse_sql(&case.sql, &schemas) else {
        return true;
    };
    let Ok(e) = translate(&q, &schemas) else {
        return true;
    };
    required_height(&e, &case.db).is_ok_and(|h| h <= height as usize)
}

/// A random case whose worksheet fits in `height` rows. Cases the pipeline
/// rejects are returned as generated, so that they surface as failures.
pub fn gen_case(rng: &mut impl Rng, height: u32) -> Case {
    loop {
        let tables = gen_tables(rng);
        let mut db = Database::new();
        for t in &tables {
            let types: Vec<Ty> = t.cols.iter().map(|c| c.1).collect();
            db.insert(t.name.clone(), Relation::from_rows(types.len(), gen_rows(rng, &types)));
        }
        let sql = QueryGen { rng, tables: &tables }.query();
        let case = Case {
            ddl: ddl(&tables),
            sql,
            db,
        };
        if fits(&case, height) {
            return case;
        }
    }
}
