use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::schema::{ColumnKind, Schema};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// One typed value. Categorical cells hold an index into the column's level list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Numeric(f64),
    Categorical(u32),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_level(&self) -> Option<usize> {
        match *self {
            Cell::Categorical(l) => Some(l as usize),
            _ => None,
        }
    }
}

/// Rows of cells under a [`Schema`], stored row-major.
///
/// Every constructor checks the invariants: one cell per column, numeric cells
/// inside the declared range, level indices in bounds, `Missing` only in
/// nullable columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    cells: Vec<Cell>,
}

impl Dataset {
    pub fn empty(schema: Arc<Schema>) -> Self {
        Dataset { schema, cells: Vec::new() }
    }

    pub fn from_rows(schema: Arc<Schema>, rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<Self> {
        let mut d = Dataset::empty(schema);
        for row in rows {
            d.push_row(&row)?;
        }
        Ok(d)
    }

    /// Appends a row after validating it; errors carry the row index it would get.
    pub fn push_row(&mut self, row: &[Cell]) -> Result<()> {
        let idx = self.n_rows();
        check_row(&self.schema, row, idx)?;
        self.cells.extend_from_slice(row);
        Ok(())
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len() / self.schema.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        let w = self.schema.len();
        &self.cells[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, Cell> {
        self.cells.chunks_exact(self.schema.len())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Cell> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// New dataset holding the given rows (indices may repeat).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut cells = Vec::with_capacity(indices.len() * self.schema.len());
        for &i in indices {
            cells.extend_from_slice(self.row(i));
        }
        Dataset { schema: self.schema.clone(), cells }
    }

    /// Rows of `self` followed by rows of `other`; schemas must be equal.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != other.schema {
            return Err(Error::Schema("cannot concatenate datasets with different schemas".into()));
        }
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        Ok(Dataset { schema: self.schema.clone(), cells })
    }

    /// Drops column `j`, returning the reduced dataset.
    pub fn without_column(&self, j: usize) -> Result<Dataset> {
        let schema = Arc::new(self.schema.without(j)?);
        let mut cells = Vec::with_capacity(self.cells.len());
        for r in self.rows() {
            cells.extend(r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, c)| *c));
        }
        Ok(Dataset { schema, cells })
    }

    /// Text of a cell: level name, shortest round-trip decimal, or empty for Missing.
    pub fn cell_text(&self, j: usize, cell: Cell) -> String {
        match cell {
            Cell::Missing => String::new(),
            Cell::Numeric(v) => format!("{v}"),
            Cell::Categorical(l) => self.schema.column(j).levels().map(|ls| ls[l as usize].clone()).unwrap_or_default(),
        }
    }
}

pub(crate) fn check_row(schema: &Schema, row: &[Cell], idx: usize) -> Result<()> {
    if row.len() != schema.len() {
        return Err(Error::Cell {
            row: idx,
            column: String::from("*"),
            msg: format!("expected {} cells, got {}", schema.len(), row.len()),
        });
    }
    for (spec, cell) in schema.columns().iter().zip(row) {
        let bad = |msg: String| Err(Error::Cell { row: idx, column: spec.name.clone(), msg });
        match (&spec.kind, *cell) {
            (_, Cell::Missing) if !spec.nullable => return bad("missing value in non-nullable column".into()),
            (_, Cell::Missing) => {}
            (ColumnKind::Numerical { lo, hi }, Cell::Numeric(v)) => {
                if !(v >= *lo && v <= *hi) {
                    return bad(format!("value {v} outside [{lo}, {hi}]"));
                }
            }
            (ColumnKind::Categorical { levels } | ColumnKind::Binary { levels }, Cell::Categorical(l)) => {
                if l as usize >= levels.len() {
                    return bad(format!("level index {l} out of {} levels", levels.len()));
                }
            }
            _ => return bad("cell type does not match column kind".into()),
        }
    }
    Ok(())
}

/// Seeded random partition into `(train, test)` with `|test| = round(test_fraction * n)`,
/// adjusted so both sides stay nonempty when `n >= 2`.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if d.is_empty() {
        return Err(invalid!("cannot split an empty dataset"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(invalid!("test fraction must lie in (0, 1), got {test_fraction}"));
    }
    let n = d.n_rows();
    let mut n_test = libm::round(test_fraction * n as f64) as usize;
    if n >= 2 {
        n_test = n_test.clamp(1, n - 1);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (test_idx, train_idx) = perm.split_at(n_test);
    Ok((d.select(train_idx), d.select(test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSpec;
    use alloc::vec;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                ColumnSpec::numerical("x", 0.0, 10.0, true),
                ColumnSpec::categorical("c", &["a", "b", "c"], false),
            ])
            .unwrap(),
        )
    }

    fn numbered(n: usize) -> Dataset {
        Dataset::from_rows(schema(), (0..n).map(|i| vec![Cell::Numeric(i as f64), Cell::Categorical((i % 3) as u32)]))
            .unwrap()
    }

    #[test]
    fn row_validation() {
        let s = schema();
        let mut d = Dataset::empty(s);
        assert!(d.push_row(&[Cell::Numeric(11.0), Cell::Categorical(0)]).is_err());
        assert!(d.push_row(&[Cell::Numeric(1.0), Cell::Categorical(3)]).is_err());
        assert!(d.push_row(&[Cell::Numeric(1.0), Cell::Missing]).is_err());
        assert!(d.push_row(&[Cell::Categorical(0), Cell::Categorical(0)]).is_err());
        assert!(d.push_row(&[Cell::Numeric(f64::NAN), Cell::Categorical(0)]).is_err());
        d.push_row(&[Cell::Missing, Cell::Categorical(2)]).unwrap();
        let err = d.push_row(&[Cell::Numeric(1.0)]).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 1, .. }));
        assert_eq!(d.n_rows(), 1);
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = numbered(10);
        let (train, test) = split_dataset(&d, 0.2, 7).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (8, 2));
        let mut seen: Vec<f64> = train.column(0).chain(test.column(0)).map(|c| c.as_f64().unwrap()).collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(split_dataset(&d, 0.2, 7).unwrap(), (train, test));
    }

    #[test]
    fn split_keeps_both_sides() {
        let d = numbered(3);
        let (train, test) = split_dataset(&d, 0.01, 1).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (2, 1));
        let (train, test) = split_dataset(&d, 0.99, 1).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (1, 2));
        assert!(split_dataset(&d, 0.0, 1).is_err());
        assert!(split_dataset(&Dataset::empty(schema()), 0.5, 1).is_err());
    }

    #[test]
    fn without_column_drops_cells() {
        let d = numbered(4).without_column(0).unwrap();
        assert_eq!(d.n_cols(), 1);
        assert_eq!(d.row(2), &[Cell::Categorical(2)]);
    }
}
