use std::collections::HashMap;
use std::sync::Arc;

use crate::formula::column_letters;
use crate::grid::{format_number, quote_text};
use crate::ra::{
    oracle_eval, AggOp, Aggregate, CmpOp, Database, Datum, Direction, Predicate, RAExpr, RaError,
    ScalarExpr,
};
use crate::sql::{ColumnType, TableSchema};

use super::{formula, ColumnSpec, Fault, InputBlock, OpBlock, PlanError, WorksheetPlan};

const NULL: &str = "INDEX(0,-1)";

/// A relation placed on the sheet.
#[derive(Debug, Clone)]
struct Rel {
    cols: Vec<u32>,
    types: Vec<Option<ColumnType>>,
}

impl Rel {
    fn arity(&self) -> usize {
        self.cols.len()
    }

    fn col(&self, ordinal: usize) -> u32 {
        self.cols[ordinal - 1]
    }

    fn label(&self) -> String {
        let contiguous = self.cols.windows(2).all(|w| w[1] == w[0] + 1);
        if contiguous && self.cols.len() > 1 {
            format!(
                "{}:{}",
                column_letters(self.cols[0]),
                column_letters(*self.cols.last().unwrap())
            )
        } else {
            let v: Vec<String> = self.cols.iter().map(|&c| column_letters(c)).collect();
            v.join(",")
        }
    }
}

fn rc(c: u32) -> String {
    format!("RC{c}")
}

fn whole(c: u32) -> String {
    format!("C{c}")
}

fn prefix(c: u32) -> String {
    format!("R1C{c}:RC{c}")
}

fn count_rows(c: u32) -> String {
    format!("=COUNTA(C{c})-COUNTIFS(C{c},NA())")
}

fn letter(c: u32) -> String {
    column_letters(c)
}

pub(crate) struct Builder<'a> {
    schemas: &'a [TableSchema],
    height: u32,
    max_cols: u32,
    next: u32,
    inputs: Vec<InputBlock>,
    blocks: Vec<OpBlock>,
    open: Option<OpBlock>,
    tables: HashMap<String, Rel>,
    pub(crate) fault: Option<Fault>,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(schemas: &'a [TableSchema], height: u32, max_cols: u32) -> Builder<'a> {
        Builder {
            schemas,
            height,
            max_cols,
            next: 1,
            inputs: Vec::new(),
            blocks: Vec::new(),
            open: None,
            tables: HashMap::new(),
            fault: None,
        }
    }

    pub(crate) fn skip_to(&mut self, col: u32) {
        self.next = self.next.max(col);
    }

    /// Registers a relation already present in the sheet and moves the
    /// first free column past it.
    pub(crate) fn place(&mut self, table: &str, cols: Vec<u32>, types: Vec<Option<ColumnType>>) {
        self.next = self.next.max(cols.iter().max().map_or(1, |c| c + 1));
        self.tables.insert(table.to_ascii_lowercase(), Rel { cols, types });
    }

    pub(crate) fn plan(&mut self, e: &RAExpr) -> Result<WorksheetPlan, PlanError> {
        // inputs first, in order of first use
        self.inputs_of(e);
        let out = self.emit(e)?;
        let end = self.next;
        let m = out.arity() as u32;
        let at_end = out.cols.iter().enumerate().all(|(i, &c)| c == end - m + i as u32);
        let is_input = self
            .inputs
            .iter()
            .any(|b| out.cols.first() == Some(&b.start_col))
            || self.tables.values().any(|t| t.cols == out.cols);
        let out = if at_end && !is_input {
            out
        } else {
            self.begin(format!("Output (copy of {})", out.label()));
            let mut cols = Vec::new();
            for (j, &c) in out.cols.iter().enumerate() {
                cols.push(self.push(None, Some(format!("={}", rc(c))), format!("output column {}", j + 1))?);
            }
            self.end(cols.clone());
            Rel { cols, types: out.types }
        };
        if self.next - 1 > self.max_cols {
            return Err(PlanError::Layout {
                required: self.next - 1,
                max: self.max_cols,
            });
        }
        Ok(WorksheetPlan {
            input_blocks: std::mem::take(&mut self.inputs),
            op_blocks: std::mem::take(&mut self.blocks),
            output_cols: out.cols,
            height: self.height,
        })
    }

    fn inputs_of(&mut self, e: &RAExpr) {
        match e {
            RAExpr::Reference { table, arity } => {
                let key = table.to_ascii_lowercase();
                if !self.tables.contains_key(&key) {
                    let start = self.next;
                    self.next += *arity as u32;
                    let types = self
                        .schemas
                        .iter()
                        .find(|s| s.name.eq_ignore_ascii_case(table))
                        .filter(|s| s.arity() == *arity)
                        .map(|s| s.types.clone())
                        .unwrap_or_else(|| vec![None; *arity]);
                    self.inputs.push(InputBlock {
                        table: table.clone(),
                        start_col: start,
                        arity: *arity,
                    });
                    self.tables.insert(
                        key,
                        Rel {
                            cols: (start..start + *arity as u32).collect(),
                            types,
                        },
                    );
                }
            }
            RAExpr::Select(c, p) => {
                self.inputs_of(c);
                self.inputs_of_pred(p);
            }
            other => {
                for c in other.children() {
                    self.inputs_of(c);
                }
            }
        }
    }

    fn inputs_of_pred(&mut self, p: &Predicate) {
        match p {
            Predicate::And(l, r) | Predicate::Or(l, r) => {
                self.inputs_of_pred(l);
                self.inputs_of_pred(r);
            }
            Predicate::Not(x) => self.inputs_of_pred(x),
            Predicate::In { rel, .. } | Predicate::Exists { rel, .. } => self.inputs_of(rel),
            _ => {}
        }
    }

    fn begin(&mut self, operator: String) {
        debug_assert!(self.open.is_none());
        self.open = Some(OpBlock {
            operator,
            start_col: self.next,
            columns: Vec::new(),
            output: Vec::new(),
        });
    }

    /// Appends a column to the open block and returns its number.
    fn push(&mut self, first: Option<String>, rest: Option<String>, what: impl AsRef<str>) -> Result<u32, PlanError> {
        let block = self.open.as_mut().expect("open block");
        let col = self.next;
        let parse = |t: Option<String>| -> Result<Option<Arc<crate::formula::Expr>>, PlanError> {
            t.map(|t| formula(&t).map(Arc::new)).transpose()
        };
        block.columns.push(ColumnSpec {
            first: parse(first)?,
            rest: parse(rest)?,
            comment: format!("{}: {}", block.operator, what.as_ref()),
        });
        self.next += 1;
        Ok(col)
    }

    /// A column with the same formula in every row.
    fn fill(&mut self, text: String, what: impl AsRef<str>) -> Result<u32, PlanError> {
        self.push(None, Some(text), what)
    }

    fn end(&mut self, output: Vec<u32>) {
        let mut block = self.open.take().expect("open block");
        block.output = output;
        self.blocks.push(block);
    }

    fn emit(&mut self, e: &RAExpr) -> Result<Rel, PlanError> {
        match e {
            RAExpr::Reference { table, .. } => Ok(self.tables[&table.to_ascii_lowercase()].clone()),
            RAExpr::Project(c, cols) => {
                let r = self.emit(c)?;
                let out = self.project(&r, cols)?;
                let covers = (1..=r.arity()).all(|o| cols.contains(&o));
                if covers {
                    Ok(out)
                } else {
                    self.dedup(&out)
                }
            }
            RAExpr::Extend(c, exprs) => {
                let r = self.emit(c)?;
                self.extend(&r, exprs)
            }
            RAExpr::Select(c, p) => {
                let r = self.emit(c)?;
                let mut subs = HashMap::new();
                self.subqueries(p, &mut subs)?;
                let loose = self.select(&r, p, &subs)?;
                self.standardize(&loose)
            }
            RAExpr::EqJoin(l, r, lo, ro) => {
                let (l, r) = (self.emit(l)?, self.emit(r)?);
                self.join(&l, &r, *lo, *ro)
            }
            RAExpr::Semijoin(l, r, lo, ro) => {
                let (l, r) = (self.emit(l)?, self.emit(r)?);
                let loose = self.semijoin(&l, &r, *lo, *ro)?;
                self.standardize(&loose)
            }
            RAExpr::Product(l, r) => {
                let (l, r) = (self.emit(l)?, self.emit(r)?);
                self.product(&l, &r)
            }
            RAExpr::UnionSet(l, r) => {
                let (l, r) = (self.emit(l)?, self.emit(r)?);
                let both = self.concat(&l, &r)?;
                self.dedup(&both)
            }
            RAExpr::DiffSet(l, r) | RAExpr::IntersectSet(l, r) => {
                let keep_found = matches!(e, RAExpr::IntersectSet(..));
                let (l, r) = (self.emit(l)?, self.emit(r)?);
                let loose = self.filter_by(&l, &r, keep_found)?;
                self.dedup(&loose)
            }
            RAExpr::DeDup(c) => {
                let r = self.emit(c)?;
                self.dedup(&r)
            }
            RAExpr::Sort(c, k, dir) => {
                let r = self.emit(c)?;
                self.sort(&r, *k, *dir)
            }
            RAExpr::GroupAgg(c, groups, aggs) => {
                let r = self.emit(c)?;
                let loose = self.group_agg(&r, groups, aggs)?;
                self.standardize(&loose)
            }
            RAExpr::Standardize(c) => {
                let r = self.emit(c)?;
                self.standardize(&r)
            }
            RAExpr::ErrorTrap(c) => {
                let r = self.emit(c)?;
                self.error_trap(&r)
            }
        }
    }

    fn subqueries(&mut self, p: &Predicate, subs: &mut HashMap<*const RAExpr, Rel>) -> Result<(), PlanError> {
        match p {
            Predicate::And(l, r) | Predicate::Or(l, r) => {
                self.subqueries(l, subs)?;
                self.subqueries(r, subs)
            }
            Predicate::Not(x) => self.subqueries(x, subs),
            Predicate::In { rel, .. } | Predicate::Exists { rel, .. } => {
                let r = self.emit(rel)?;
                subs.insert(&**rel as *const RAExpr, r);
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn project(&mut self, r: &Rel, cols: &[usize]) -> Result<Rel, PlanError> {
        let list: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
        self.begin(format!("Project {} on [{}]", r.label(), list.join(", ")));
        let mut out = Vec::new();
        for &o in cols {
            out.push(self.fill(format!("={}", rc(r.col(o))), format!("copy of {}", letter(r.col(o))))?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: cols.iter().map(|&o| r.types[o - 1]).collect(),
        })
    }

    fn extend(&mut self, r: &Rel, exprs: &[ScalarExpr]) -> Result<Rel, PlanError> {
        self.begin(format!("Extend {} with computed columns", r.label()));
        let mut cols = r.cols.clone();
        let mut types = r.types.clone();
        for e in exprs {
            let text = format!(
                "=IF(ISNA({}),NA(),IFERROR({},{NULL}))",
                rc(r.col(1)),
                scalar(e, r)
            );
            cols.push(self.fill(text, format!("value of {e}"))?);
            types.push(scalar_type(e, r));
        }
        let new: Vec<u32> = cols[r.arity()..].to_vec();
        self.end(new);
        Ok(Rel { cols, types })
    }

    fn error_trap(&mut self, r: &Rel) -> Result<Rel, PlanError> {
        self.begin(format!("ErrorTrap {}", r.label()));
        let mut out = Vec::new();
        for &c in &r.cols {
            let text = format!(
                "=IF(ISNA({}),NA(),IF(ISERROR({c}),{NULL},{c}))",
                rc(r.col(1)),
                c = rc(c)
            );
            out.push(self.fill(text, format!("errors of {} as NULL", letter(c)))?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: r.types.clone(),
        })
    }

    /// Rank, locator and fetch columns that move the rows whose `keep` cell
    /// is not `#N/A` to the top, in order.
    fn compact(&mut self, keep: u32, r: &Rel) -> Result<Rel, PlanError> {
        let rank = self.fill(
            format!("=IF(ISNA({}),NA(),COUNTIFS({},\"<>#N/A\"))", rc(keep), prefix(keep)),
            "rank among kept rows",
        )?;
        let loc = self.fill(format!("=MATCH(ROW(),{},0)", whole(rank)), "source row")?;
        let mut out = Vec::new();
        for &c in &r.cols {
            out.push(self.fill(
                format!("=INDEX({},{})", whole(c), rc(loc)),
                format!("value from {}", letter(c)),
            )?);
        }
        Ok(Rel {
            cols: out,
            types: r.types.clone(),
        })
    }

    fn standardize(&mut self, r: &Rel) -> Result<Rel, PlanError> {
        self.begin(format!("Standardize {}", r.label()));
        let out = self.compact(r.col(1), r)?;
        self.end(out.cols.clone());
        Ok(out)
    }

    fn dedup(&mut self, r: &Rel) -> Result<Rel, PlanError> {
        self.begin(format!("DeDup {}", r.label()));
        let crit: Vec<String> = r.cols.iter().map(|&c| format!("{},{}", prefix(c), rc(c))).collect();
        let marker = self.fill(
            format!(
                "=IF(ISNA({}),NA(),IF(COUNTIFS({})=1,1,NA()))",
                rc(r.col(1)),
                crit.join(",")
            ),
            "1 on the first occurrence of a tuple",
        )?;
        let out = self.compact(marker, r)?;
        self.end(out.cols.clone());
        Ok(out)
    }

    fn concat(&mut self, l: &Rel, r: &Rel) -> Result<Rel, PlanError> {
        self.begin(format!("UnionSet {} and {} (concatenation)", l.label(), r.label()));
        let n = self.push(Some(count_rows(l.col(1))), None, "number of rows of the left input")?;
        let mut out = Vec::new();
        for j in 1..=l.arity() {
            out.push(self.fill(
                format!(
                    "=IF(ROW()<=R1C{n},INDEX({},ROW()),INDEX({},ROW()-R1C{n}))",
                    whole(l.col(j)),
                    whole(r.col(j))
                ),
                format!("column {j}"),
            )?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: l.types.clone(),
        })
    }

    fn filter_by(&mut self, l: &Rel, r: &Rel, keep_found: bool) -> Result<Rel, PlanError> {
        let name = if keep_found { "IntersectSet" } else { "DiffSet" };
        self.begin(format!("{name} {} and {}", l.label(), r.label()));
        let crit: Vec<String> = (1..=l.arity())
            .map(|j| format!("{},{}", whole(r.col(j)), rc(l.col(j))))
            .collect();
        let test = if keep_found { ">0" } else { "=0" };
        let marker = self.fill(
            format!(
                "=IF(ISNA({}),NA(),IF(COUNTIFS({}){test},1,NA()))",
                rc(l.col(1)),
                crit.join(",")
            ),
            if keep_found {
                "1 when the tuple occurs in the right input"
            } else {
                "1 when the tuple is absent from the right input"
            },
        )?;
        let mut out = Vec::new();
        for &c in &l.cols {
            out.push(self.fill(
                format!("=IF(ISNA({}),NA(),{})", rc(marker), rc(c)),
                format!("kept value of {}", letter(c)),
            )?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: l.types.clone(),
        })
    }

    fn product(&mut self, l: &Rel, r: &Rel) -> Result<Rel, PlanError> {
        self.begin(format!("Product {} and {}", l.label(), r.label()));
        let nl = self.push(Some(count_rows(l.col(1))), None, "number of rows of the left input")?;
        let nr = self.push(Some(count_rows(r.col(1))), None, "number of rows of the right input")?;
        let mut out = Vec::new();
        for &c in &l.cols {
            out.push(self.fill(
                format!(
                    "=IF(ROW()>R1C{nl}*R1C{nr},NA(),INDEX({},QUOTIENT(ROW()-1,R1C{nr})+1))",
                    whole(c)
                ),
                format!("left value from {}", letter(c)),
            )?);
        }
        for &c in &r.cols {
            out.push(self.fill(
                format!("=IF(ROW()>R1C{nl}*R1C{nr},NA(),INDEX({},MOD(ROW()-1,R1C{nr})+1))", whole(c)),
                format!("right value from {}", letter(c)),
            )?);
        }
        self.end(out.clone());
        let mut types = l.types.clone();
        types.extend(r.types.iter().copied());
        Ok(Rel { cols: out, types })
    }

    fn sort(&mut self, r: &Rel, k: usize, dir: Direction) -> Result<Rel, PlanError> {
        let key = r.col(k);
        let (word, op) = match dir {
            Direction::Asc => ("ascending", "<"),
            Direction::Desc => ("descending", ">"),
        };
        self.begin(format!("Sort {} by {} {word}", r.label(), letter(key)));
        let n = self.push(Some(count_rows(key)), None, "number of rows")?;
        let c = whole(key);
        let nums = self.push(
            Some(format!("=COUNTIFS({c},\"<0\")+COUNTIFS({c},\">=0\")")),
            None,
            "number of numeric keys",
        )?;
        let bools = self.push(
            Some(format!("=COUNTIFS({c},TRUE)+COUNTIFS({c},FALSE)")),
            None,
            "number of logical keys",
        )?;
        let texts = self.push(
            Some(format!("=R1C{n}-R1C{nums}-R1C{bools}-COUNTIFS({c},{NULL})")),
            None,
            "number of text keys",
        )?;
        let k = rc(key);
        // numbers sort before text, text before logicals
        let is_num = format!("COUNTIFS({k},\"<0\")+COUNTIFS({k},\">=0\")>0");
        let is_bool = format!("COUNTIFS({k},TRUE)+COUNTIFS({k},FALSE)>0");
        let below = match dir {
            Direction::Asc => format!("IF({is_num},0,R1C{nums}+IF({is_bool},R1C{texts},0))"),
            Direction::Desc => format!("IF({is_bool},0,R1C{bools}+IF({is_num},R1C{texts},0))"),
        };
        let pos = self.fill(
            format!(
                "=IF(ISNA({k}),R1C{n}+1,IF(ISERR({k}),R1C{n}-COUNTIFS({c},{k})+COUNTIFS({p},{k}),\
                 {below}+COUNTIFS({c},\"{op}\"&{k})+COUNTIFS({p},{k})))",
                p = prefix(key)
            ),
            "target row",
        )?;
        let loc = self.fill(format!("=MATCH(ROW(),{},0)", whole(pos)), "source row")?;
        let mut out = Vec::new();
        for &c in &r.cols {
            out.push(self.fill(
                format!("=INDEX({},{})", whole(c), rc(loc)),
                format!("sorted value of {}", letter(c)),
            )?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: r.types.clone(),
        })
    }

    fn semijoin(&mut self, l: &Rel, r: &Rel, lo: usize, ro: usize) -> Result<Rel, PlanError> {
        self.begin(format!(
            "Semijoin {} with {} on {} = {}",
            l.label(),
            r.label(),
            letter(l.col(lo)),
            letter(r.col(ro))
        ));
        let miss = match self.fault {
            Some(Fault::SemijoinKeepsAll) => rc(l.col(1)),
            None => "NA()".to_string(),
        };
        let first = self.fill(
            format!(
                "=IF(ISERROR(MATCH({},{},0)),{miss},{})",
                rc(l.col(lo)),
                whole(r.col(ro)),
                rc(l.col(1))
            ),
            format!("value of {}, or #N/A without a partner", letter(l.col(1))),
        )?;
        let mut out = vec![first];
        for &c in &l.cols[1..] {
            out.push(self.fill(
                format!("=IF(ISNA({}),NA(),{})", rc(first), rc(c)),
                format!("value of {}", letter(c)),
            )?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: l.types.clone(),
        })
    }

    /// Distinct keys of a relation sorted on `k`, with their multiplicities.
    fn key_counts(&mut self, r: &Rel, k: usize) -> Result<Rel, PlanError> {
        let key = r.col(k);
        self.begin(format!("Key counts of {} on {}", r.label(), letter(key)));
        let x = self.fill(
            format!(
                "=IF(ISNA({k}),NA(),IF(COUNTIFS({},{k})=1,{k},NA()))",
                prefix(key),
                k = rc(key)
            ),
            "key, on its first row",
        )?;
        let card = self.fill(
            format!("=IF(ISNA({}),NA(),COUNTIFS({},{}))", rc(x), whole(key), rc(x)),
            "number of rows with the key",
        )?;
        self.end(vec![x, card]);
        let loose = Rel {
            cols: vec![x, card],
            types: vec![r.types[k - 1], Some(ColumnType::Numeric)],
        };
        self.standardize(&loose)
    }

    fn join(&mut self, l: &Rel, r: &Rel, lo: usize, ro: usize) -> Result<Rel, PlanError> {
        let sl = self.semijoin(l, r, lo, ro)?;
        let sl = self.standardize(&sl)?;
        let sr = self.semijoin(r, l, ro, lo)?;
        let sr = self.standardize(&sr)?;
        let sl = self.sort(&sl, lo, Direction::Asc)?;
        let sr = self.sort(&sr, ro, Direction::Asc)?;
        let kl = self.key_counts(&sl, lo)?;
        let kr = self.key_counts(&sr, ro)?;
        let (xl, cl) = (kl.col(1), kl.col(2));
        let (xr, cr) = (kr.col(1), kr.col(2));

        self.begin(format!(
            "EqJoin {} and {} on {} = {}",
            l.label(),
            r.label(),
            letter(l.col(lo)),
            letter(r.col(ro))
        ));
        let pl = self.fill(
            format!("=MATCH({},{},0)", rc(xl), whole(sl.col(lo))),
            "first left row of the key",
        )?;
        let pr = self.fill(
            format!("=MATCH({},{},0)", rc(xr), whole(sr.col(ro))),
            "first right row of the key",
        )?;
        let size = self.fill(format!("=IFERROR({}*{},\"\")", rc(cl), rc(cr)), "block size")?;
        let start = self.push(
            Some("=0".into()),
            Some(format!("=IFERROR(R[-1]C{size}+R[-1]C,\"\")")),
            "rows before the block",
        )?;
        let total = self.push(Some(format!("=SUM({})", whole(size))), None, "join cardinality")?;
        let block = self.fill(
            format!("=IF(ROW()>R1C{total},NA(),MATCH(ROW()-1,{},1))", whole(start)),
            "block of the output row",
        )?;
        let within = self.push(
            Some(format!("=IF(ISNA({b}),NA(),1)", b = rc(block))),
            Some(format!(
                "=IF(ISNA({b}),NA(),IF({b}<>R[-1]C{block},1,1+R[-1]C))",
                b = rc(block)
            )),
            "position within the block",
        )?;
        let b = rc(block);
        let mut out = vec![self.fill(format!("=INDEX({},{b})", whole(xl)), "join key")?];
        let mut types = vec![l.types[lo - 1]];
        for j in (1..=sl.arity()).filter(|&j| j != lo) {
            out.push(self.fill(
                format!(
                    "=INDEX({},INDEX({},{b})+MOD({}-1,INDEX({},{b})))",
                    whole(sl.col(j)),
                    whole(pl),
                    rc(within),
                    whole(cl)
                ),
                format!("left value from {}", letter(sl.col(j))),
            )?);
            types.push(l.types[j - 1]);
        }
        for j in (1..=sr.arity()).filter(|&j| j != ro) {
            out.push(self.fill(
                format!(
                    "=INDEX({},INDEX({},{b})+QUOTIENT({}-1,INDEX({},{b})))",
                    whole(sr.col(j)),
                    whole(pr),
                    rc(within),
                    whole(cl)
                ),
                format!("right value from {}", letter(sr.col(j))),
            )?);
            types.push(r.types[j - 1]);
        }
        self.end(out.clone());
        Ok(Rel { cols: out, types })
    }

    fn group_agg(&mut self, r: &Rel, groups: &[usize], aggs: &[Aggregate]) -> Result<Rel, PlanError> {
        for a in aggs {
            if matches!(a.op, AggOp::Min | AggOp::Max) {
                let c = a.cols[0];
                if let Some(t @ (ColumnType::Text | ColumnType::Boolean)) = r.types[c - 1] {
                    return Err(PlanError::NonNumeric {
                        op: a.op.name(),
                        column: c,
                        found: format!("{t:?}").to_lowercase(),
                    });
                }
            }
        }
        let gl: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
        let al: Vec<String> = aggs.iter().map(|a| a.to_string()).collect();
        self.begin(format!("GroupAgg {} by [{}] computing [{}]", r.label(), gl.join(", "), al.join(", ")));
        let x1 = r.col(1);
        // criteria selecting the rows of the current row's group
        let (g_all, g_pre) = if groups.is_empty() {
            (
                format!("{},\"<>#N/A\"", whole(x1)),
                format!("{},\"<>#N/A\"", prefix(x1)),
            )
        } else {
            let all: Vec<String> = groups
                .iter()
                .map(|&g| format!("{},{}", whole(r.col(g)), rc(r.col(g))))
                .collect();
            let pre: Vec<String> = groups
                .iter()
                .map(|&g| format!("{},{}", prefix(r.col(g)), rc(r.col(g))))
                .collect();
            (all.join(","), pre.join(","))
        };
        let occ = self.fill(
            format!("=IF(ISNA({}),NA(),COUNTIFS({g_pre}))", rc(x1)),
            "occurrence number of the group",
        )?;

        // helpers per aggregate
        let mut helper: Vec<Option<u32>> = Vec::new();
        for a in aggs {
            let h = match a.op {
                AggOp::Min | AggOp::Max => {
                    let v = r.col(a.cols[0]);
                    let op = if a.op == AggOp::Min { "<" } else { ">" };
                    Some(self.fill(
                        format!(
                            "=IF(ISNA({x}),NA(),IF(ISERR({v}),COUNTIFS({g_all})-COUNTIFS({g_all},{vc},{v}),\
                             COUNTIFS({g_all},{vc},\"{op}\"&{v})+COUNTIFS({g_pre},{vp},{v})-1))",
                            x = rc(x1),
                            v = rc(v),
                            vc = whole(v),
                            vp = prefix(v)
                        ),
                        format!(
                            "group rows before this one in {} order ({})",
                            if a.op == AggOp::Min { "ascending" } else { "descending" },
                            a
                        ),
                    )?)
                }
                AggOp::Sum | AggOp::Avg => {
                    let v = r.col(a.cols[0]);
                    Some(self.fill(format!("=IFERROR({},\"\")", rc(v)), format!("NULLs of {} as empty text", letter(v)))?)
                }
                AggOp::CountDistinct => {
                    let all_null: Vec<String> = a.cols.iter().map(|&c| format!("ISERROR({})", rc(r.col(c)))).collect();
                    let pre: Vec<String> = a
                        .cols
                        .iter()
                        .map(|&c| format!("{},{}", prefix(r.col(c)), rc(r.col(c))))
                        .collect();
                    Some(self.fill(
                        format!(
                            "=IF(ISNA({}),NA(),IF(AND({}),{NULL},COUNTIFS({g_pre},{})))",
                            rc(x1),
                            all_null.join(","),
                            pre.join(",")
                        ),
                        format!("occurrence number of the value within the group ({a})"),
                    )?)
                }
                AggOp::Count => None,
            };
            helper.push(h);
        }

        // group keys on the first row of each group
        let mut out = Vec::new();
        let mut types = Vec::new();
        for &g in groups {
            out.push(self.fill(
                format!("=IF({}=1,{},NA())", rc(occ), rc(r.col(g))),
                format!("group value of {}", letter(r.col(g))),
            )?);
            types.push(r.types[g - 1]);
        }
        let gate = match out.first() {
            Some(&c) => c,
            None => self.fill(format!("=IF({}=1,1,NA())", rc(occ)), "1 on the first row")?,
        };
        let gated = |body: String| format!("=IF(ISNA({}),NA(),{body})", rc(gate));
        for (a, h) in aggs.iter().zip(&helper) {
            let non_null = |c: usize| format!("(COUNTIFS({g_all})-COUNTIFS({g_all},{},{NULL}))", whole(r.col(c)));
            let body = match a.op {
                AggOp::Count if a.cols.is_empty() => format!("COUNTIFS({g_all})"),
                AggOp::Count => {
                    let crit: Vec<String> = a.cols.iter().map(|&c| format!("{},{NULL}", whole(r.col(c)))).collect();
                    format!("COUNTIFS({g_all})-COUNTIFS({g_all},{})", crit.join(","))
                }
                AggOp::Sum => format!(
                    "IF({n}=0,{NULL},SUMIFS({},{g_all}))",
                    whole(h.unwrap()),
                    n = non_null(a.cols[0])
                ),
                AggOp::Avg => format!(
                    "IF({n}=0,{NULL},SUMIFS({},{g_all})/{n})",
                    whole(h.unwrap()),
                    n = non_null(a.cols[0])
                ),
                AggOp::Min | AggOp::Max => format!(
                    "SUMIFS({},{g_all},{},0)",
                    whole(r.col(a.cols[0])),
                    whole(h.unwrap())
                ),
                AggOp::CountDistinct => format!("COUNTIFS({g_all},{},1)", whole(h.unwrap())),
            };
            out.push(self.fill(gated(body), a.to_string())?);
            types.push(match a.op {
                AggOp::Min | AggOp::Max => r.types[a.cols[0] - 1],
                _ => Some(ColumnType::Numeric),
            });
        }
        self.end(out.clone());
        Ok(Rel { cols: out, types })
    }

    fn select(&mut self, r: &Rel, p: &Predicate, subs: &HashMap<*const RAExpr, Rel>) -> Result<Rel, PlanError> {
        self.begin(format!("Select {} where {p}", r.label()));
        let cond = self.predicate(p, r, subs)?;
        let mut out = Vec::new();
        for &c in &r.cols {
            out.push(self.fill(
                format!(
                    "=IF(ISNA({}),NA(),IF(IFERROR({cond},FALSE),{},NA()))",
                    rc(r.col(1)),
                    rc(c)
                ),
                format!("value of {} on rows where the condition is TRUE", letter(c)),
            )?);
        }
        self.end(out.clone());
        Ok(Rel {
            cols: out,
            types: r.types.clone(),
        })
    }

    /// Adds helper columns evaluating `p` to TRUE, FALSE or `#VALUE!`
    /// (unknown); returns a reference to the result.
    fn predicate(&mut self, p: &Predicate, r: &Rel, subs: &HashMap<*const RAExpr, Rel>) -> Result<String, PlanError> {
        let col = match p {
            Predicate::Const(b) => return Ok(if *b { "TRUE" } else { "FALSE" }.to_string()),
            Predicate::Compare(op, a, b) => self.fill(
                format!("=IFERROR({}{}{},{NULL})", scalar(a, r), cmp_symbol(*op), scalar(b, r)),
                format!("{p}"),
            )?,
            Predicate::IsNull(e) => self.fill(format!("=ISERROR({})", scalar(e, r)), format!("{p}"))?,
            Predicate::Not(x) => {
                let v = self.predicate(x, r, subs)?;
                self.fill(format!("=IF(ISERROR({v}),{NULL},NOT({v}))"), format!("{p}"))?
            }
            Predicate::And(x, y) => {
                let a = self.predicate(x, r, subs)?;
                let b = self.predicate(y, r, subs)?;
                self.fill(
                    format!(
                        "=IF(OR(NOT(IFERROR({a},TRUE)),NOT(IFERROR({b},TRUE))),FALSE,\
                         IF(OR(ISERROR({a}),ISERROR({b})),{NULL},TRUE))"
                    ),
                    "AND of the two columns to the left (three-valued)",
                )?
            }
            Predicate::Or(x, y) => {
                let a = self.predicate(x, r, subs)?;
                let b = self.predicate(y, r, subs)?;
                self.fill(
                    format!(
                        "=IF(OR(IFERROR({a},FALSE),IFERROR({b},FALSE)),TRUE,\
                         IF(OR(ISERROR({a}),ISERROR({b})),{NULL},FALSE))"
                    ),
                    "OR of the two columns to the left (three-valued)",
                )?
            }
            Predicate::In { expr, rel, negated } => {
                let s = whole(subs[&(&**rel as *const RAExpr)].col(1));
                let x = scalar(expr, r);
                let found = self.fill(
                    format!(
                        "=IF(COUNTIFS({s},\"<>#N/A\")=0,FALSE,IF(ISERROR({x}),{NULL},\
                         IF(ISERROR(MATCH({x},{s},0)),IF(COUNTIFS({s},{NULL})>0,{NULL},FALSE),TRUE)))"
                    ),
                    format!("{expr} IN {}", subs[&(&**rel as *const RAExpr)].label()),
                )?;
                if *negated {
                    self.fill(format!("=IF(ISERROR({f}),{NULL},NOT({f}))", f = rc(found)), format!("{p}"))?
                } else {
                    found
                }
            }
            Predicate::Exists { rel, negated } => {
                let s = whole(subs[&(&**rel as *const RAExpr)].col(1));
                let test = if *negated { "=0" } else { ">0" };
                self.fill(format!("=COUNTIFS({s},\"<>#N/A\"){test}"), format!("{p}"))?
            }
        };
        Ok(rc(col))
    }
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    op.symbol()
}

fn literal(d: &Datum) -> String {
    match d {
        Datum::Null => NULL.to_string(),
        Datum::Number(x) if *x < 0.0 => format!("(-{})", format_number(-x)),
        Datum::Number(x) => format_number(*x),
        Datum::Text(s) => quote_text(s),
        Datum::Bool(true) => "TRUE".into(),
        Datum::Bool(false) => "FALSE".into(),
    }
}

fn scalar(e: &ScalarExpr, r: &Rel) -> String {
    match e {
        ScalarExpr::Column(c) => rc(r.col(*c)),
        ScalarExpr::Literal(d) => literal(d),
        ScalarExpr::Neg(x) => format!("-({})", scalar(x, r)),
        ScalarExpr::Arith(op, a, b) => format!("({}{}{})", scalar(a, r), op.symbol(), scalar(b, r)),
    }
}

fn scalar_type(e: &ScalarExpr, r: &Rel) -> Option<ColumnType> {
    match e {
        ScalarExpr::Column(c) => r.types[c - 1],
        ScalarExpr::Literal(Datum::Number(_)) => Some(ColumnType::Numeric),
        ScalarExpr::Literal(Datum::Text(_)) => Some(ColumnType::Text),
        ScalarExpr::Literal(Datum::Bool(_)) => Some(ColumnType::Boolean),
        ScalarExpr::Literal(Datum::Null) => None,
        _ => Some(ColumnType::Numeric),
    }
}

/// Smallest sheet height that holds every intermediate relation the plan
/// materializes for this database.
pub fn required_height(e: &RAExpr, db: &Database) -> Result<usize, RaError> {
    let mut best = 1;
    visit(e, db, &mut best)?;
    Ok(best)
}

fn visit(e: &RAExpr, db: &Database, best: &mut usize) -> Result<usize, RaError> {
    let here = oracle_eval(e, db)?.len();
    *best = (*best).max(here);
    let mut sizes = Vec::new();
    for c in e.children() {
        sizes.push(visit(c, db, best)?);
    }
    match e {
        RAExpr::Reference { table, .. } => {
            if let Some(r) = db.get(table) {
                *best = (*best).max(r.rows.len());
            }
        }
        RAExpr::UnionSet(..) => *best = (*best).max(sizes[0] + sizes[1]),
        RAExpr::Select(_, p) => visit_pred(p, db, best)?,
        _ => {}
    }
    Ok(here)
}

fn visit_pred(p: &Predicate, db: &Database, best: &mut usize) -> Result<(), RaError> {
    match p {
        Predicate::And(l, r) | Predicate::Or(l, r) => {
            visit_pred(l, db, best)?;
            visit_pred(r, db, best)
        }
        Predicate::Not(x) => visit_pred(x, db, best),
        Predicate::In { rel, .. } | Predicate::Exists { rel, .. } => visit(rel, db, best).map(|_| ()),
        _ => Ok(()),
    }
}
