use std::collections::VecDeque;

use crate::formula::{BinaryOp, Expr, Function, UnaryOp};
use crate::grid::{resolve_ref, Cell, CellRef, CellValue, Coord, ErrorKind, RangeRef, RefComponent, Workbook};

use super::criteria::Criterion;
use super::functions::{
    self, counta, eval_countifs, eval_index_scalar, eval_match, eval_sumifs, fold_numbers, index_position, CellSeq,
};
use super::value::{compare_values, to_bool, to_number, to_text};
use super::EvalError;

static BLANK: CellValue = CellValue::Blank;

enum Slot {
    Pending,
    Active,
    Done(CellValue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Cells are computed on first read.
    Demand,
    /// Cells must already be computed when read.
    Static,
}

/// Inclusive rectangle of absolute coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Area {
    r1: u32,
    c1: u32,
    r2: u32,
    c2: u32,
}

impl Area {
    fn single(at: Coord) -> Area {
        Area {
            r1: at.row,
            c1: at.col,
            r2: at.row,
            c2: at.col,
        }
    }

    fn height(&self) -> u32 {
        self.r2 - self.r1 + 1
    }

    fn width(&self) -> u32 {
        self.c2 - self.c1 + 1
    }

    fn len(&self) -> usize {
        self.height() as usize * self.width() as usize
    }

    fn coord(&self, i: usize) -> Coord {
        let w = self.width() as usize;
        Coord::new(self.r1 + (i / w) as u32, self.c1 + (i % w) as u32)
    }
}

enum Arg {
    Value(CellValue),
    Area(Area),
    /// A reference that points outside the sheet.
    BadRef,
}

struct View<'e, 'w> {
    engine: &'e Engine<'w>,
    area: Area,
}

impl CellSeq for View<'_, '_> {
    fn len(&self) -> usize {
        self.area.len()
    }

    fn at(&self, i: usize) -> &CellValue {
        self.engine.peek(self.area.coord(i))
    }
}

type Eval<T> = Result<T, EvalError>;

pub(crate) struct Engine<'w> {
    height: u32,
    max_cols: u32,
    rows: u32,
    cols: u32,
    formulas: Vec<Option<&'w Expr>>,
    slots: Vec<Slot>,
    stack: Vec<Coord>,
    mode: Mode,
}

impl<'w> Engine<'w> {
    pub(crate) fn new(wb: &'w Workbook, mode: Mode) -> Engine<'w> {
        let rows = wb.cells().map(|(c, _)| c.row).max().unwrap_or(0);
        let cols = wb.used_columns();
        let size = rows as usize * cols as usize;
        let mut formulas = vec![None; size];
        let mut slots = Vec::with_capacity(size);
        slots.resize_with(size, || Slot::Done(CellValue::Blank));
        for (at, cell) in wb.cells() {
            let i = (at.col as usize - 1) * rows as usize + (at.row as usize - 1);
            match cell {
                Cell::Literal(v) => slots[i] = Slot::Done(v.clone()),
                Cell::Formula(e) => {
                    formulas[i] = Some(&**e);
                    slots[i] = Slot::Pending;
                }
            }
        }
        Engine {
            height: wb.height(),
            max_cols: wb.max_cols(),
            rows,
            cols,
            formulas,
            slots,
            stack: Vec::new(),
            mode,
        }
    }

    fn index(&self, at: Coord) -> Option<usize> {
        (at.row >= 1 && at.col >= 1 && at.row <= self.rows && at.col <= self.cols)
            .then(|| (at.col as usize - 1) * self.rows as usize + (at.row as usize - 1))
    }

    /// Evaluates every formula cell, column by column.
    pub(crate) fn run_all(&mut self) -> Eval<()> {
        for col in 1..=self.cols {
            for row in 1..=self.rows {
                self.ensure(Coord::new(row, col))?;
            }
        }
        Ok(())
    }

    /// Evaluates cells in the given order; used by static mode.
    pub(crate) fn run_in_order(&mut self, order: &[Coord]) -> Eval<()> {
        for at in order {
            let i = self.index(*at).expect("ordered cell inside the sheet");
            let expr = self.formulas[i].expect("ordered cell holds a formula");
            self.slots[i] = Slot::Active;
            let v = self.formula_value(expr, *at)?;
            self.slots[i] = Slot::Done(v);
        }
        Ok(())
    }

    pub(crate) fn into_values(self) -> (u32, u32, Vec<CellValue>) {
        let values = self
            .slots
            .into_iter()
            .map(|s| match s {
                Slot::Done(v) => v,
                _ => CellValue::Blank,
            })
            .collect();
        (self.rows, self.cols, values)
    }

    /// Formula cells in the bounding box, with their static references.
    pub(crate) fn static_order(&self) -> Eval<Vec<Coord>> {
        let mut ids = std::collections::HashMap::new();
        let mut nodes = Vec::new();
        for (i, f) in self.formulas.iter().enumerate() {
            if f.is_some() {
                let at = Coord::new((i % self.rows as usize) as u32 + 1, (i / self.rows as usize) as u32 + 1);
                ids.insert(at, nodes.len());
                nodes.push(at);
            }
        }
        let mut indegree = vec![0usize; nodes.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (n, at) in nodes.iter().enumerate() {
            let expr = self.formulas[self.index(*at).unwrap()].unwrap();
            let mut deps = Vec::new();
            let mut offset = false;
            expr.walk(&mut |e| match e {
                Expr::Ref(r) => {
                    if let Some(a) = self.resolve_cell(*r, *at) {
                        deps.push(a);
                    }
                }
                Expr::Range(r) => {
                    if let Some(a) = self.resolve_range(*r, *at) {
                        deps.push(a);
                    }
                }
                Expr::Call(Function::Offset, _) => offset = true,
                _ => {}
            });
            if offset {
                return Err(EvalError::Unsupported("OFFSET in static evaluation".into()));
            }
            let mut seen = std::collections::HashSet::new();
            for a in deps {
                let r2 = a.r2.min(self.rows);
                let c2 = a.c2.min(self.cols);
                for col in a.c1..=c2 {
                    for row in a.r1..=r2 {
                        if let Some(&d) = ids.get(&Coord::new(row, col)) {
                            if seen.insert(d) {
                                indegree[n] += 1;
                                users[d].push(n);
                            }
                        }
                    }
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..nodes.len()).filter(|&n| indegree[n] == 0).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(nodes[n]);
            for &u in &users[n] {
                indegree[u] -= 1;
                if indegree[u] == 0 {
                    queue.push_back(u);
                }
            }
        }
        if order.len() < nodes.len() {
            let cells = (0..nodes.len()).filter(|&n| indegree[n] > 0).map(|n| nodes[n]).collect();
            return Err(EvalError::CircularReference { cells });
        }
        Ok(order)
    }

    fn ensure(&mut self, at: Coord) -> Eval<()> {
        let Some(i) = self.index(at) else {
            return Ok(());
        };
        match self.slots[i] {
            Slot::Done(_) => Ok(()),
            Slot::Active => {
                let from = self.stack.iter().position(|c| *c == at).unwrap_or(0);
                let mut cells = self.stack[from..].to_vec();
                if cells.is_empty() {
                    cells.push(at);
                }
                Err(EvalError::CircularReference { cells })
            }
            Slot::Pending => {
                if self.mode == Mode::Static {
                    return Err(EvalError::ReadBeforeFinal(at));
                }
                let expr = self.formulas[i].expect("pending slot holds a formula");
                self.slots[i] = Slot::Active;
                self.stack.push(at);
                let v = self.formula_value(expr, at)?;
                self.stack.pop();
                self.slots[i] = Slot::Done(v);
                Ok(())
            }
        }
    }

    /// A formula whose result is an empty cell displays as 0.
    fn formula_value(&mut self, expr: &Expr, at: Coord) -> Eval<CellValue> {
        Ok(match self.eval(expr, at)? {
            CellValue::Blank => CellValue::Number(0.0),
            v => v,
        })
    }

    fn peek(&self, at: Coord) -> &CellValue {
        match self.index(at) {
            Some(i) => match &self.slots[i] {
                Slot::Done(v) => v,
                _ => &BLANK,
            },
            None => &BLANK,
        }
    }

    fn read(&mut self, at: Coord) -> Eval<CellValue> {
        self.ensure(at)?;
        Ok(self.peek(at).clone())
    }

    fn ensure_area(&mut self, a: Area) -> Eval<()> {
        let r2 = a.r2.min(self.rows);
        let c2 = a.c2.min(self.cols);
        for col in a.c1..=c2 {
            for row in a.r1..=r2 {
                self.ensure(Coord::new(row, col))?;
            }
        }
        Ok(())
    }

    fn in_sheet(&self, row: i64, col: i64) -> bool {
        row >= 1 && col >= 1 && row <= i64::from(self.height) && col <= i64::from(self.max_cols)
    }

    fn resolve_cell(&self, r: CellRef, anchor: Coord) -> Option<Area> {
        let c = resolve_ref(r, anchor).ok()?;
        self.in_sheet(i64::from(c.row), i64::from(c.col)).then(|| Area::single(c))
    }

    fn resolve_range(&self, r: RangeRef, anchor: Coord) -> Option<Area> {
        match r {
            RangeRef::Area { start, end } => {
                let a = self.resolve_cell(start, anchor)?;
                let b = self.resolve_cell(end, anchor)?;
                Some(Area {
                    r1: a.r1.min(b.r1),
                    c1: a.c1.min(b.c1),
                    r2: a.r1.max(b.r1),
                    c2: a.c1.max(b.c1),
                })
            }
            RangeRef::Column(c) => {
                let col = axis(c, anchor.col)?;
                self.in_sheet(1, i64::from(col)).then_some(Area {
                    r1: 1,
                    c1: col,
                    r2: self.height,
                    c2: col,
                })
            }
            RangeRef::Row(r) => {
                let row = axis(r, anchor.row)?;
                self.in_sheet(i64::from(row), 1).then_some(Area {
                    r1: row,
                    c1: 1,
                    r2: row,
                    c2: self.max_cols,
                })
            }
        }
    }

    fn arg(&mut self, e: &Expr, at: Coord) -> Eval<Arg> {
        Ok(match e {
            Expr::Ref(r) => self.resolve_cell(*r, at).map_or(Arg::BadRef, Arg::Area),
            Expr::Range(r) => self.resolve_range(*r, at).map_or(Arg::BadRef, Arg::Area),
            Expr::Call(Function::Offset, args) => self.offset(args, at)?,
            other => Arg::Value(self.eval(other, at)?),
        })
    }

    /// Reduces an argument to one value, intersecting ranges with the anchor's row or column.
    fn scalar(&mut self, arg: Arg, at: Coord) -> Eval<CellValue> {
        match arg {
            Arg::Value(v) => Ok(v),
            Arg::BadRef => Ok(CellValue::Error(ErrorKind::Ref)),
            Arg::Area(a) => {
                if a.len() == 1 {
                    self.read(Coord::new(a.r1, a.c1))
                } else if a.width() == 1 && (a.r1..=a.r2).contains(&at.row) {
                    self.read(Coord::new(at.row, a.c1))
                } else if a.height() == 1 && (a.c1..=a.c2).contains(&at.col) {
                    self.read(Coord::new(a.r1, at.col))
                } else {
                    Ok(CellValue::Error(ErrorKind::Value))
                }
            }
        }
    }

    pub(crate) fn eval(&mut self, e: &Expr, at: Coord) -> Eval<CellValue> {
        match e {
            Expr::Literal(v) => Ok(v.clone()),
            Expr::Ref(_) | Expr::Range(_) => {
                let a = self.arg(e, at)?;
                self.scalar(a, at)
            }
            Expr::Unary(UnaryOp::Neg, inner) => {
                let v = self.eval(inner, at)?;
                Ok(match to_number(&v) {
                    Ok(x) => CellValue::number(-x),
                    Err(k) => CellValue::Error(k),
                })
            }
            Expr::Binary(op, l, r) => {
                let lv = self.eval(l, at)?;
                let rv = self.eval(r, at)?;
                Ok(binary(*op, &lv, &rv))
            }
            Expr::Call(f, args) => self.call(*f, args, at),
        }
    }

    fn number_arg(&mut self, e: &Expr, at: Coord) -> Eval<Result<f64, ErrorKind>> {
        let v = self.eval(e, at)?;
        Ok(to_number(&v))
    }

    fn call(&mut self, f: Function, args: &[Expr], at: Coord) -> Eval<CellValue> {
        use CellValue::{Boolean, Error, Number};
        macro_rules! num {
            ($e:expr) => {
                match self.number_arg($e, at)? {
                    Ok(x) => x,
                    Err(k) => return Ok(Error(k)),
                }
            };
        }
        Ok(match f {
            Function::If => {
                let c = self.eval(&args[0], at)?;
                match to_bool(&c) {
                    Err(k) => Error(k),
                    Ok(true) => self.eval(&args[1], at)?,
                    Ok(false) => match args.get(2) {
                        Some(e) => self.eval(e, at)?,
                        None => Boolean(false),
                    },
                }
            }
            Function::And | Function::Or => {
                let is_and = f == Function::And;
                let mut seen = false;
                let mut acc = is_and;
                let mut error = None;
                for a in args {
                    let mut bools = Vec::new();
                    match self.arg(a, at)? {
                        Arg::Area(area) => {
                            self.ensure_area(area)?;
                            let view = View { engine: self, area };
                            for i in 0..view.len() {
                                match view.at(i) {
                                    Boolean(b) => bools.push(Ok(*b)),
                                    Number(x) => bools.push(Ok(*x != 0.0)),
                                    Error(k) => bools.push(Err(*k)),
                                    _ => {}
                                }
                            }
                        }
                        Arg::BadRef => bools.push(Err(ErrorKind::Ref)),
                        Arg::Value(CellValue::Blank) => {}
                        Arg::Value(v) => bools.push(to_bool(&v)),
                    }
                    for b in bools {
                        match b {
                            Ok(b) => {
                                seen = true;
                                acc = if is_and { acc && b } else { acc || b };
                            }
                            Err(k) => {
                                error.get_or_insert(k);
                            }
                        }
                    }
                }
                match error {
                    Some(k) => Error(k),
                    None if !seen => Error(ErrorKind::Value),
                    None => Boolean(acc),
                }
            }
            Function::Not => {
                let v = self.eval(&args[0], at)?;
                match to_bool(&v) {
                    Ok(b) => Boolean(!b),
                    Err(k) => Error(k),
                }
            }
            Function::Na => Error(ErrorKind::Na),
            Function::IsNa => Boolean(self.eval(&args[0], at)?.is_na()),
            Function::IsErr => {
                let v = self.eval(&args[0], at)?;
                Boolean(v.is_error() && !v.is_na())
            }
            Function::IsError => Boolean(self.eval(&args[0], at)?.is_error()),
            Function::IfError => {
                let v = self.eval(&args[0], at)?;
                if v.is_error() {
                    self.eval(&args[1], at)?
                } else {
                    v
                }
            }
            Function::Match => {
                let lookup = self.eval(&args[0], at)?;
                let mode = match args.get(2) {
                    None | Some(Expr::Literal(CellValue::Blank)) => 1,
                    Some(e) => {
                        let m = num!(e);
                        if m > 0.0 {
                            1
                        } else if m < 0.0 {
                            -1
                        } else {
                            0
                        }
                    }
                };
                match self.arg(&args[1], at)? {
                    Arg::BadRef => Error(ErrorKind::Ref),
                    Arg::Value(Error(k)) => Error(k),
                    Arg::Value(_) => Error(ErrorKind::Na),
                    Arg::Area(area) if area.width() != 1 && area.height() != 1 => Error(ErrorKind::Na),
                    Arg::Area(area) => {
                        self.ensure_area(area)?;
                        eval_match(&lookup, &View { engine: self, area }, mode)
                    }
                }
            }
            Function::Index => self.index_fn(args, at)?,
            Function::Offset => {
                let a = self.offset(args, at)?;
                self.scalar(a, at)?
            }
            Function::CountIf | Function::CountIfs => {
                let pairs = match self.criteria_pairs(args, at)? {
                    Ok(p) => p,
                    Err(k) => return Ok(Error(k)),
                };
                let views: Vec<(View, Criterion)> =
                    pairs.into_iter().map(|(area, c)| (View { engine: self, area }, c)).collect();
                let refs: Vec<(&dyn CellSeq, Criterion)> =
                    views.iter().map(|(v, c)| (v as &dyn CellSeq, c.clone())).collect();
                eval_countifs(&refs)
            }
            Function::SumIfs => {
                let sum_area = match self.arg(&args[0], at)? {
                    Arg::Area(a) => a,
                    Arg::BadRef => return Ok(Error(ErrorKind::Ref)),
                    Arg::Value(Error(k)) => return Ok(Error(k)),
                    Arg::Value(_) => return Ok(Error(ErrorKind::Value)),
                };
                let pairs = match self.criteria_pairs(&args[1..], at)? {
                    Ok(p) => p,
                    Err(k) => return Ok(Error(k)),
                };
                self.ensure_area(sum_area)?;
                let sum_view = View { engine: self, area: sum_area };
                let views: Vec<(View, Criterion)> =
                    pairs.into_iter().map(|(area, c)| (View { engine: self, area }, c)).collect();
                let refs: Vec<(&dyn CellSeq, Criterion)> =
                    views.iter().map(|(v, c)| (v as &dyn CellSeq, c.clone())).collect();
                eval_sumifs(&sum_view, &refs)
            }
            Function::Sum | Function::Min | Function::Max => {
                let mut xs = Vec::new();
                for a in args {
                    match self.arg(a, at)? {
                        Arg::Area(area) => {
                            self.ensure_area(area)?;
                            if let Err(k) = fold_numbers(&View { engine: self, area }, &mut xs) {
                                return Ok(Error(k));
                            }
                        }
                        Arg::BadRef => return Ok(Error(ErrorKind::Ref)),
                        Arg::Value(CellValue::Blank) => {}
                        Arg::Value(v) => match to_number(&v) {
                            Ok(x) => xs.push(x),
                            Err(k) => return Ok(Error(k)),
                        },
                    }
                }
                let r = match f {
                    Function::Sum => xs.iter().sum(),
                    Function::Min => xs.iter().copied().reduce(f64::min).unwrap_or(0.0),
                    _ => xs.iter().copied().reduce(f64::max).unwrap_or(0.0),
                };
                CellValue::number(r)
            }
            Function::CountA => {
                let mut n = 0;
                for a in args {
                    match self.arg(a, at)? {
                        Arg::Area(area) => {
                            self.ensure_area(area)?;
                            n += counta(&View { engine: self, area });
                        }
                        Arg::BadRef => return Ok(Error(ErrorKind::Ref)),
                        Arg::Value(CellValue::Blank) => {}
                        Arg::Value(_) => n += 1,
                    }
                }
                Number(n as f64)
            }
            Function::Row | Function::Column => match args.first() {
                None => Number(f64::from(if f == Function::Row { at.row } else { at.col })),
                Some(e) => match self.arg(e, at)? {
                    Arg::Area(a) => Number(f64::from(if f == Function::Row { a.r1 } else { a.c1 })),
                    Arg::BadRef => Error(ErrorKind::Ref),
                    Arg::Value(Error(k)) => Error(k),
                    Arg::Value(_) => Error(ErrorKind::Value),
                },
            },
            Function::Mod => {
                let a = num!(&args[0]);
                let b = num!(&args[1]);
                functions::modulo(a, b)
            }
            Function::Quotient => {
                let a = num!(&args[0]);
                let b = num!(&args[1]);
                functions::quotient(a, b)
            }
            Function::Power => {
                let a = num!(&args[0]);
                let b = num!(&args[1]);
                functions::power(a, b)
            }
        })
    }

    /// Ranges and criteria for COUNTIF(S)/SUMIFS, with every range evaluated.
    fn criteria_pairs(&mut self, args: &[Expr], at: Coord) -> Eval<Result<Vec<(Area, Criterion)>, ErrorKind>> {
        let mut pairs = Vec::with_capacity(args.len() / 2);
        for chunk in args.chunks(2) {
            let area = match self.arg(&chunk[0], at)? {
                Arg::Area(a) => a,
                Arg::BadRef => return Ok(Err(ErrorKind::Ref)),
                Arg::Value(CellValue::Error(k)) => return Ok(Err(k)),
                Arg::Value(_) => return Ok(Err(ErrorKind::Value)),
            };
            let crit = self.eval(&chunk[1], at)?;
            pairs.push((area, Criterion::parse(&crit)));
        }
        for (area, _) in &pairs {
            self.ensure_area(*area)?;
        }
        Ok(Ok(pairs))
    }

    fn index_fn(&mut self, args: &[Expr], at: Coord) -> Eval<CellValue> {
        let target = self.arg(&args[0], at)?;
        let i = self.eval(&args[1], at)?;
        let j = match args.get(2) {
            None | Some(Expr::Literal(CellValue::Blank)) => None,
            Some(e) => Some(self.eval(e, at)?),
        };
        let area = match target {
            Arg::BadRef => return Ok(CellValue::Error(ErrorKind::Ref)),
            Arg::Value(v) => {
                return Ok(match j {
                    None => eval_index_scalar(&v, &i),
                    Some(j) => match eval_index_scalar(&v, &j) {
                        CellValue::Error(k) => CellValue::Error(k),
                        _ => eval_index_scalar(&v, &i),
                    },
                });
            }
            Arg::Area(a) => a,
        };
        if let CellValue::Error(k) = i {
            return Ok(CellValue::Error(k));
        }
        let (row, col) = match j {
            Some(j) => {
                if let CellValue::Error(k) = j {
                    return Ok(CellValue::Error(k));
                }
                let r = index_position(area.height() as usize, &i);
                let c = index_position(area.width() as usize, &j);
                match (r, c) {
                    (Ok(r), Ok(c)) => (r, c),
                    (Err(k), _) | (_, Err(k)) => return Ok(CellValue::Error(k)),
                }
            }
            None if area.width() == 1 => match index_position(area.height() as usize, &i) {
                Ok(r) => (r, 0),
                Err(k) => return Ok(CellValue::Error(k)),
            },
            None if area.height() == 1 => match index_position(area.width() as usize, &i) {
                Ok(c) => (0, c),
                Err(k) => return Ok(CellValue::Error(k)),
            },
            None => return Ok(CellValue::Error(ErrorKind::Value)),
        };
        self.read(Coord::new(area.r1 + row as u32, area.c1 + col as u32))
    }

    fn offset(&mut self, args: &[Expr], at: Coord) -> Eval<Arg> {
        let base = match self.arg(&args[0], at)? {
            Arg::Area(a) => a,
            Arg::BadRef => return Ok(Arg::Value(CellValue::Error(ErrorKind::Ref))),
            Arg::Value(CellValue::Error(k)) => return Ok(Arg::Value(CellValue::Error(k))),
            Arg::Value(_) => return Ok(Arg::Value(CellValue::Error(ErrorKind::Value))),
        };
        let mut nums = [0.0f64; 4];
        let defaults = [0.0, 0.0, f64::from(base.height()), f64::from(base.width())];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = match args.get(k + 1) {
                None | Some(Expr::Literal(CellValue::Blank)) => defaults[k],
                Some(e) => match self.number_arg(e, at)? {
                    Ok(x) => x.trunc(),
                    Err(kind) => return Ok(Arg::Value(CellValue::Error(kind))),
                },
            };
        }
        let [dr, dc, h, w] = nums;
        let r1 = f64::from(base.r1) + dr;
        let c1 = f64::from(base.c1) + dc;
        let r2 = r1 + h - 1.0;
        let c2 = c1 + w - 1.0;
        if h < 1.0 || w < 1.0 || r1 < 1.0 || c1 < 1.0 || r2 > f64::from(self.height) || c2 > f64::from(self.max_cols) {
            return Ok(Arg::Value(CellValue::Error(ErrorKind::Ref)));
        }
        Ok(Arg::Area(Area {
            r1: r1 as u32,
            c1: c1 as u32,
            r2: r2 as u32,
            c2: c2 as u32,
        }))
    }
}

fn axis(c: RefComponent, anchor: u32) -> Option<u32> {
    let v = c.resolve(anchor);
    (v >= 1 && v <= i64::from(u32::MAX)).then_some(v as u32)
}

pub(crate) fn binary(op: BinaryOp, l: &CellValue, r: &CellValue) -> CellValue {
    use std::cmp::Ordering;
    if let CellValue::Error(k) = l {
        return CellValue::Error(*k);
    }
    if let CellValue::Error(k) = r {
        return CellValue::Error(*k);
    }
    if op.is_comparison() {
        let ord = compare_values(l, r);
        let b = match op {
            BinaryOp::Eq => ord == Ordering::Equal,
            BinaryOp::Ne => ord != Ordering::Equal,
            BinaryOp::Lt => ord == Ordering::Less,
            BinaryOp::Le => ord != Ordering::Greater,
            BinaryOp::Gt => ord == Ordering::Greater,
            _ => ord != Ordering::Less,
        };
        return CellValue::Boolean(b);
    }
    if op == BinaryOp::Concat {
        return match (to_text(l), to_text(r)) {
            (Ok(a), Ok(b)) => CellValue::Text(a + &b),
            (Err(k), _) | (_, Err(k)) => CellValue::Error(k),
        };
    }
    let (a, b) = match (to_number(l), to_number(r)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(k), _) | (_, Err(k)) => return CellValue::Error(k),
    };
    match op {
        BinaryOp::Add => CellValue::number(a + b),
        BinaryOp::Sub => CellValue::number(a - b),
        BinaryOp::Mul => CellValue::number(a * b),
        BinaryOp::Div if b == 0.0 => CellValue::Error(ErrorKind::Div0),
        BinaryOp::Div => CellValue::number(a / b),
        _ => functions::power(a, b),
    }
}
