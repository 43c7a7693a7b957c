use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::data::{Cell, ColumnKind, Dataset, Schema};
use crate::error::{invalid, Error, Result};

/// Name of the level appended to nullable categorical columns.
pub const UNK: &str = "UNK";

/// Largest number of decimals tracked for numeric resolution.
const MAX_DECIMALS: u32 = 6;

/// Fitted transform of one source column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnCoding {
    Numeric {
        min: f64,
        max: f64,
        /// Decimal resolution of the training values, if at most six places.
        decimals: Option<u32>,
        /// Whether a fill indicator block follows the numeric entry.
        indicator: bool,
    },
    Categorical {
        /// Schema levels, plus [`UNK`] last when `unk` is set.
        levels: Vec<String>,
        unk: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Numeric,
    Categorical,
    /// Fill indicator of a numeric column: level 0 `not-filled`, level 1 `filled`.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Categorical blocks are one column per level.
    OneHot,
    /// Every block is a single column.
    Band,
}

/// One contiguous group of encoded columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub source: usize,
    pub kind: BlockKind,
    pub offset: usize,
    pub width: usize,
    /// Level count; 1 for numeric blocks.
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub width: usize,
    pub encoding: Encoding,
}

impl Layout {
    fn build(columns: &[ColumnCoding], encoding: Encoding) -> Layout {
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |source, kind, levels: usize| {
            let width = match (encoding, kind) {
                (Encoding::OneHot, BlockKind::Categorical | BlockKind::Indicator) => levels,
                _ => 1,
            };
            blocks.push(Block { source, kind, offset, width, levels });
            offset += width;
        };
        for (j, c) in columns.iter().enumerate() {
            match c {
                ColumnCoding::Numeric { indicator, .. } => {
                    push(j, BlockKind::Numeric, 1);
                    if *indicator {
                        push(j, BlockKind::Indicator, 2);
                    }
                }
                ColumnCoding::Categorical { levels, .. } => push(j, BlockKind::Categorical, levels.len()),
            }
        }
        Layout { blocks, width: offset, encoding }
    }

    /// Blocks that are categorical or indicator (softmax heads / embeddings).
    pub fn discrete_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.kind != BlockKind::Numeric)
    }

    pub fn numeric_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Numeric)
    }
}

/// Fitted per-column transforms plus the layouts they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingPlan {
    schema: Arc<Schema>,
    columns: Vec<ColumnCoding>,
    layout: Arc<Layout>,
    band_layout: Arc<Layout>,
}

impl EncodingPlan {
    /// Rebuilds a plan from stored column codings, checking them against `schema`.
    pub fn from_parts(schema: Arc<Schema>, columns: Vec<ColumnCoding>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(invalid!("{} codings for {} columns", columns.len(), schema.len()));
        }
        for (spec, c) in schema.columns().iter().zip(&columns) {
            let ok = match (&spec.kind, c) {
                (ColumnKind::Numerical { .. }, ColumnCoding::Numeric { min, max, indicator, .. }) => {
                    min < max && *indicator == spec.nullable
                }
                (_, ColumnCoding::Categorical { levels, unk }) => {
                    let base = spec.levels().unwrap_or(&[]);
                    *unk == spec.nullable
                        && levels.len() == base.len() + *unk as usize
                        && levels[..base.len()] == *base
                }
                _ => false,
            };
            if !ok {
                return Err(invalid!("coding of column `{}` does not match the schema", spec.name));
            }
        }
        let layout = Arc::new(Layout::build(&columns, Encoding::OneHot));
        let band_layout = Arc::new(Layout::build(&columns, Encoding::Band));
        Ok(EncodingPlan { schema, columns, layout, band_layout })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnCoding] {
        &self.columns
    }

    /// One-hot layout; its width is the encoded dimension `d`.
    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Single-column-per-block layout used by the band codec.
    pub fn band_layout(&self) -> &Arc<Layout> {
        &self.band_layout
    }

    pub fn layout_for(&self, encoding: Encoding) -> &Arc<Layout> {
        match encoding {
            Encoding::OneHot => &self.layout,
            Encoding::Band => &self.band_layout,
        }
    }

    pub fn width(&self) -> usize {
        self.layout.width
    }

    pub(crate) fn check_schema(&self, d: &Dataset) -> Result<()> {
        if **d.schema() != *self.schema {
            return Err(Error::Schema("dataset schema differs from the plan's schema".into()));
        }
        Ok(())
    }
}

fn decimals_of(values: &[f64]) -> Option<u32> {
    (0..=MAX_DECIMALS).find(|&p| {
        let scale = libm::pow(10.0, p as f64);
        values.iter().all(|&v| libm::round(v * scale) / scale == v)
    })
}

/// Fits scaling bounds, level lists and indicator blocks on training data.
pub fn fit_plan(train: &Dataset) -> Result<EncodingPlan> {
    if train.is_empty() {
        return Err(invalid!("cannot fit an encoding plan on an empty dataset"));
    }
    let schema = train.schema().clone();
    let mut columns = Vec::with_capacity(schema.len());
    for (j, spec) in schema.columns().iter().enumerate() {
        let coding = match &spec.kind {
            ColumnKind::Numerical { .. } => {
                let values: Vec<f64> = train.column(j).filter_map(|c| c.as_f64()).collect();
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if min >= max || min.is_nan() || max.is_nan() {
                    return Err(Error::Cell {
                        row: 0,
                        column: spec.name.clone(),
                        msg: format!("numerical column needs two distinct observed values (saw {})", values.len()),
                    });
                }
                ColumnCoding::Numeric { min, max, decimals: decimals_of(&values), indicator: spec.nullable }
            }
            ColumnKind::Categorical { levels } | ColumnKind::Binary { levels } => {
                let mut levels = levels.clone();
                if spec.nullable {
                    levels.push(UNK.to_string());
                }
                ColumnCoding::Categorical { levels, unk: spec.nullable }
            }
        };
        columns.push(coding);
    }
    EncodingPlan::from_parts(schema, columns)
}

/// Index of the block level a cell falls in, for categorical and indicator blocks.
pub(crate) fn level_of(coding: &ColumnCoding, kind: BlockKind, cell: Cell) -> Option<usize> {
    match (kind, coding, cell) {
        (BlockKind::Indicator, _, Cell::Missing) => Some(1),
        (BlockKind::Indicator, _, _) => Some(0),
        (BlockKind::Categorical, _, Cell::Categorical(l)) => Some(l as usize),
        (BlockKind::Categorical, ColumnCoding::Categorical { levels, unk: true }, Cell::Missing) => Some(levels.len() - 1),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pnr_schema, ColumnSpec};
    use alloc::vec;

    fn small() -> Dataset {
        let schema = Arc::new(
            Schema::new(vec![
                ColumnSpec::numerical("v", 0.0, 100.0, false),
                ColumnSpec::categorical("c", &["A", "B"], true),
                ColumnSpec::numerical("age", 0.0, 99.0, true),
            ])
            .unwrap(),
        );
        Dataset::from_rows(
            schema,
            vec![
                vec![Cell::Numeric(10.0), Cell::Categorical(0), Cell::Numeric(30.5)],
                vec![Cell::Numeric(20.0), Cell::Missing, Cell::Missing],
                vec![Cell::Numeric(30.0), Cell::Categorical(1), Cell::Numeric(41.25)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn observed_bounds_and_layout() {
        let plan = fit_plan(&small()).unwrap();
        assert_eq!(plan.columns()[0], ColumnCoding::Numeric { min: 10.0, max: 30.0, decimals: Some(0), indicator: false });
        assert_eq!(
            plan.columns()[1],
            ColumnCoding::Categorical { levels: vec!["A".into(), "B".into(), "UNK".into()], unk: true }
        );
        let kinds: Vec<_> = plan.layout().blocks.iter().map(|b| (b.kind, b.width)).collect();
        assert_eq!(
            kinds,
            vec![
                (BlockKind::Numeric, 1),
                (BlockKind::Categorical, 3),
                (BlockKind::Numeric, 1),
                (BlockKind::Indicator, 2)
            ]
        );
        assert_eq!(plan.width(), 7);
        assert_eq!(plan.band_layout().width, 4);
        assert!(matches!(plan.columns()[2], ColumnCoding::Numeric { decimals: Some(2), .. }));
    }

    #[test]
    fn constant_column_is_rejected() {
        let schema = Arc::new(Schema::new(vec![ColumnSpec::numerical("v", 0.0, 1.0, false)]).unwrap());
        let d = Dataset::from_rows(schema.clone(), vec![vec![Cell::Numeric(0.5)], vec![Cell::Numeric(0.5)]]).unwrap();
        assert!(fit_plan(&d).is_err());
        assert!(fit_plan(&Dataset::empty(schema)).is_err());
    }

    #[test]
    fn pnr_layout_widths() {
        let d = crate::data::make_surrogate(500, 1);
        let plan = fit_plan(&d).unwrap();
        let total: usize = plan.layout().blocks.iter().map(|b| b.width).sum();
        assert_eq!(total, plan.width());
        assert_eq!(plan.width(), 95);
        let indicators = plan.layout().blocks.iter().filter(|b| b.kind == BlockKind::Indicator).count();
        assert_eq!(indicators, 1);
        assert_eq!(*plan.schema(), pnr_schema());
    }

    #[test]
    fn from_parts_rejects_mismatch() {
        let plan = fit_plan(&small()).unwrap();
        let mut cols = plan.columns().to_vec();
        cols.swap(0, 1);
        assert!(EncodingPlan::from_parts(plan.schema().clone(), cols).is_err());
    }

    #[test]
    fn decimal_resolution() {
        assert_eq!(decimals_of(&[1.0, 2.0]), Some(0));
        assert_eq!(decimals_of(&[0.1, 2.25]), Some(2));
        assert_eq!(decimals_of(&[core::f64::consts::PI]), None);
    }
}
