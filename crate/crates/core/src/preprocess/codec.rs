use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng as _;

use super::plan::{level_of, BlockKind, ColumnCoding, Encoding, EncodingPlan, Layout};
use crate::autodiff::Tensor;
use crate::data::{Cell, Dataset};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Encoded rows together with the layout that describes their columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub values: Tensor,
    pub layout: Arc<Layout>,
}

impl EncodedMatrix {
    pub fn new(values: Tensor, layout: Arc<Layout>) -> Result<Self> {
        if values.cols() != layout.width {
            return Err(Error::Shape(alloc::format!(
                "matrix has {} columns, layout expects {}",
                values.cols(),
                layout.width
            )));
        }
        Ok(EncodedMatrix { values, layout })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }
}

pub(crate) fn scale(coding: &ColumnCoding, v: f64) -> f64 {
    match coding {
        ColumnCoding::Numeric { min, max, .. } => ((v - min) / (max - min)).clamp(0.0, 1.0),
        ColumnCoding::Categorical { .. } => unreachable!("scale on categorical column"),
    }
}

pub(crate) fn unscale(coding: &ColumnCoding, u: f64, bounds: Option<(f64, f64)>) -> f64 {
    let ColumnCoding::Numeric { min, max, decimals, .. } = coding else {
        unreachable!("unscale on categorical column")
    };
    let mut v = min + u.clamp(0.0, 1.0) * (max - min);
    if let Some(p) = decimals {
        let s = libm::pow(10.0, *p as f64);
        v = libm::round(v * s) / s;
    }
    let (lo, hi) = bounds.unwrap_or((*min, *max));
    v.clamp(lo.max(*min), hi.min(*max))
}

/// Filled numeric value for every cell of the dataset, with missing cells
/// replaced by a uniformly drawn observed value of the same column.
pub(crate) fn filled_numeric(d: &Dataset, j: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let observed: Vec<f64> = d.column(j).filter_map(|c| c.as_f64()).collect();
    d.column(j)
        .map(|c| match c.as_f64() {
            Some(v) => v,
            None if observed.is_empty() => f64::NAN,
            None => observed[rng.random_range(0..observed.len())],
        })
        .collect()
}

/// One-hot encodes `d`. Missing numeric cells are filled from the observed
/// values of the same column with a generator seeded by `seed`.
pub fn encode(d: &Dataset, plan: &EncodingPlan, seed: u64) -> Result<EncodedMatrix> {
    plan.check_schema(d)?;
    let layout = plan.layout().clone();
    let n = d.n_rows();
    let mut values = Tensor::zeros(n, layout.width);
    let mut rng = rng::seeded(seed);
    for block in &layout.blocks {
        let coding = &plan.columns()[block.source];
        match block.kind {
            BlockKind::Numeric => {
                let filled = filled_numeric(d, block.source, &mut rng);
                for (i, v) in filled.into_iter().enumerate() {
                    // A column with no observed value at all falls back to the midpoint.
                    let u = if v.is_nan() { 0.5 } else { scale(coding, v) };
                    values.set(i, block.offset, u);
                }
            }
            BlockKind::Categorical | BlockKind::Indicator => {
                for (i, cell) in d.column(block.source).enumerate() {
                    let level = level_of(coding, block.kind, cell).ok_or_else(|| Error::Cell {
                        row: i,
                        column: plan.schema().column(block.source).name.clone(),
                        msg: "missing value in a non-nullable column".into(),
                    })?;
                    values.set(i, block.offset + level, 1.0);
                }
            }
        }
    }
    EncodedMatrix::new(values, layout)
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = k;
        }
    }
    best
}

/// Maps a one-hot (or soft, generator-produced) matrix back to typed rows.
pub fn decode(m: &EncodedMatrix, plan: &EncodingPlan) -> Result<Dataset> {
    if m.layout.encoding != Encoding::OneHot || *m.layout != **plan.layout() {
        return Err(invalid!("matrix layout does not match the plan"));
    }
    if !m.values.is_finite() {
        return Err(invalid!("encoded matrix contains non-finite entries"));
    }
    decode_with(m, plan, |_, block, row| argmax(&row[block.offset..block.offset + block.width]))
}

/// Shared decoding loop; `pick` chooses the level of a discrete block.
pub(crate) fn decode_with(
    m: &EncodedMatrix,
    plan: &EncodingPlan,
    mut pick: impl FnMut(usize, &super::Block, &[f64]) -> usize,
) -> Result<Dataset> {
    let schema = plan.schema().clone();
    let mut out = Dataset::empty(schema.clone());
    let mut row_cells = Vec::with_capacity(schema.len());
    for i in 0..m.n_rows() {
        let row = m.values.row(i);
        row_cells.clear();
        row_cells.resize(schema.len(), Cell::Missing);
        for (bi, block) in m.layout.blocks.iter().enumerate() {
            let coding = &plan.columns()[block.source];
            match (block.kind, coding) {
                (BlockKind::Numeric, _) => {
                    let v = unscale(coding, row[block.offset], schema.column(block.source).range());
                    row_cells[block.source] = Cell::Numeric(v);
                }
                (BlockKind::Indicator, _) => {
                    if pick(bi, block, row) == 1 {
                        row_cells[block.source] = Cell::Missing;
                    }
                }
                (BlockKind::Categorical, ColumnCoding::Categorical { levels, unk }) => {
                    let l = pick(bi, block, row);
                    row_cells[block.source] = if *unk && l == levels.len() - 1 {
                        Cell::Missing
                    } else {
                        Cell::Categorical(l as u32)
                    };
                }
                (BlockKind::Categorical, ColumnCoding::Numeric { .. }) => unreachable!(),
            }
        }
        out.push_row(&row_cells)?;
    }
    Ok(out)
}
