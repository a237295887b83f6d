use std::sync::Arc;

use crate::eval::EvalState;
use crate::grid::{Cell, CellValue, Coord, Workbook, DEFAULT_MAX_COLS};

use super::{r1c1, SpecialError};

/// Padding value for inputs whose length is not a power of two.
pub const SENTINEL: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortLayout {
    /// Twelve columns per merge level.
    #[default]
    Expanded,
    /// Four columns per level, helpers inlined.
    Condensed,
}

impl SortLayout {
    pub fn columns_per_level(self) -> u32 {
        match self {
            SortLayout::Expanded => 12,
            SortLayout::Condensed => 4,
        }
    }
}

/// A bottom-up merge sort laid out as one column group per level.
///
/// Row 1 holds labels; item `i` sits in row `i + 1`. The input column is A.
#[derive(Debug, Clone)]
pub struct MergeSortSheet {
    pub workbook: Workbook,
    pub n: usize,
    /// `n` rounded up to a power of two.
    pub padded: usize,
    pub levels: u32,
    pub layout: SortLayout,
    pub output_col: u32,
}

impl MergeSortSheet {
    /// Columns holding formulas.
    pub fn generated_cols(&self) -> u32 {
        self.levels * self.layout.columns_per_level()
    }

    /// Writes the items into the input column.
    pub fn load(&mut self, values: &[f64]) -> Result<(), SpecialError> {
        assert_eq!(values.len(), self.n, "item count");
        for (i, &x) in values.iter().enumerate() {
            self.workbook
                .set_value(Coord::new(i as u32 + 2, 1), CellValue::number(x))?;
        }
        Ok(())
    }

    /// The first `n` values of the last level.
    pub fn read_sorted(&self, state: &EvalState) -> Vec<CellValue> {
        (0..self.n)
            .map(|i| state.value(Coord::new(i as u32 + 2, self.output_col)).clone())
            .collect()
    }
}

/// Builds the network for `n` numeric items in a sheet of `height` rows.
pub fn gen_merge_sort(n: usize, layout: SortLayout, height: u32) -> Result<MergeSortSheet, SpecialError> {
    let padded = n.max(1).next_power_of_two();
    let levels = padded.trailing_zeros();
    let needed = padded as u32 + 1;
    if needed > height {
        return Err(SpecialError::Bounds { needed, height });
    }
    let per = layout.columns_per_level();
    let width = 1 + levels * per;
    let mut wb = Workbook::with_max_cols(height, DEFAULT_MAX_COLS.max(width))?;
    wb.set_value(Coord::new(1, 1), CellValue::text("input"))?;
    wb.set_comment(Coord::new(1, 1), format!("Items to sort, {n} values from row 2"))?;
    for row in n as u32 + 2..=needed {
        wb.set_value(Coord::new(row, 1), CellValue::number(SENTINEL))?;
    }

    let texts = match layout {
        SortLayout::Expanded => expanded(),
        SortLayout::Condensed => condensed(),
    };
    for level in 0..levels {
        let start = 2 + level * per;
        for (j, (text, label)) in texts.iter().enumerate() {
            let col = start + j as u32;
            let expr = Arc::new(r1c1(text, Coord::new(2, col)));
            for row in 2..=needed {
                wb.set(Coord::new(row, col), Cell::Formula(Arc::clone(&expr)))?;
            }
            wb.set_value(Coord::new(1, col), CellValue::text(*label))?;
            wb.set_comment(
                Coord::new(1, col),
                format!("Merge level {} (blocks of {}): {label}", level + 1, 1u64 << level),
            )?;
            if j + 1 < texts.len() {
                wb.hide_column(col);
            }
        }
    }
    Ok(MergeSortSheet {
        workbook: wb,
        n,
        padded,
        levels,
        layout,
        output_col: width,
    })
}

fn expanded() -> Vec<(String, &'static str)> {
    [
        ("=QUOTIENT(COLUMN(),12)", "level"),
        ("=POWER(2,RC[-1])", "block size"),
        ("=QUOTIENT(ROW()-2,RC[-1]*2)*2*RC[-1]+1", "top start"),
        ("=RC[-1]+RC[-2]-1", "top end"),
        ("=RC[-2]+RC[-3]", "bottom start"),
        ("=RC[-2]+RC[-4]", "bottom end"),
        ("=IF(MOD(ROW()-2,RC[-5]*2)=0,RC[-4],IF(R[-1]C[4],R[-1]C+1,R[-1]C))", "top head"),
        ("=IF(MOD(ROW()-2,RC[-6]*2)=0,RC[-3],IF(R[-1]C[3],R[-1]C,R[-1]C+1))", "bottom head"),
        ("=INDEX(C[-9],RC[-2]+1)", "top candidate"),
        ("=INDEX(C[-10],RC[-2]+1)", "bottom candidate"),
        ("=IF(RC[-4]>RC[-7],FALSE,IF(RC[-3]>RC[-5],TRUE,RC[-2]<=RC[-1]))", "take top"),
        ("=IF(RC[-1],RC[-3],RC[-2])", "merged"),
    ]
    .into_iter()
    .map(|(t, l)| (t.to_string(), l))
    .collect()
}

/// The expanded group with every helper column replaced by its formula.
/// Column `j` of the group computes the level as `QUOTIENT(COLUMN()-2-j,4)`.
fn condensed() -> Vec<(String, &'static str)> {
    let size = |j: u32| format!("POWER(2,QUOTIENT(COLUMN()-{},4))", 2 + j);
    let top_start = |j: u32| format!("(QUOTIENT(ROW()-2,{s}*2)*2*{s}+1)", s = size(j));
    let top_end = |j: u32| format!("({}+{}-1)", top_start(j), size(j));
    let bottom_start = |j: u32| format!("({}+{})", top_start(j), size(j));
    let bottom_end = |j: u32| format!("({}+{})", top_end(j), size(j));
    vec![
        (
            format!(
                "=IF(MOD(ROW()-2,{}*2)=0,{},IF(R[-1]C[2],R[-1]C+1,R[-1]C))",
                size(0),
                top_start(0)
            ),
            "top head",
        ),
        (
            format!(
                "=IF(MOD(ROW()-2,{}*2)=0,{},IF(R[-1]C[1],R[-1]C,R[-1]C+1))",
                size(1),
                bottom_start(1)
            ),
            "bottom head",
        ),
        (
            format!(
                "=IF(RC[-2]>{},FALSE,IF(RC[-1]>{},TRUE,INDEX(C[-3],RC[-2]+1)<=INDEX(C[-3],RC[-1]+1)))",
                top_end(2),
                bottom_end(2)
            ),
            "take top",
        ),
        (
            "=IF(RC[-1],INDEX(C[-4],RC[-3]+1),INDEX(C[-4],RC[-2]+1))".to_string(),
            "merged",
        ),
    ]
}
