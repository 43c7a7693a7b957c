use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::codec::{decode_with, filled_numeric, scale, EncodedMatrix};
use super::plan::{level_of, BlockKind, Encoding, EncodingPlan};
use crate::autodiff::Tensor;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Interval `[a, b]` owned by one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandInterval {
    pub a: f64,
    pub b: f64,
}

impl BandInterval {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Per-block level intervals, one entry per discrete block of the plan's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCodec {
    /// Indexed by discrete block, then by level.
    intervals: Vec<Vec<BandInterval>>,
}

impl BandCodec {
    /// Builds a codec from stored intervals; each block must tile `[0, 1]`.
    pub fn from_parts(plan: &EncodingPlan, intervals: Vec<Vec<BandInterval>>) -> Result<Self> {
        let blocks: Vec<_> = plan.band_layout().discrete_blocks().collect();
        if blocks.len() != intervals.len() {
            return Err(invalid!("{} interval sets for {} blocks", intervals.len(), blocks.len()));
        }
        for (block, ivs) in blocks.iter().zip(&intervals) {
            if ivs.len() != block.levels {
                return Err(invalid!("block {} has {} levels, got {} intervals", block.source, block.levels, ivs.len()));
            }
            let total: f64 = ivs.iter().map(|iv| iv.width()).sum();
            if ivs.iter().any(|iv| !(0.0..=1.0).contains(&iv.a) || iv.b < iv.a || iv.b > 1.0)
                || (total - 1.0).abs() > 1e-9
            {
                return Err(invalid!("intervals of block {} do not tile [0, 1]", block.source));
            }
        }
        Ok(BandCodec { intervals })
    }

    pub fn intervals(&self) -> &[Vec<BandInterval>] {
        &self.intervals
    }

    /// Level whose interval contains `u`; intervals are right-open except the last.
    fn level_at(&self, block: usize, u: f64) -> usize {
        let ivs = &self.intervals[block];
        let u = u.clamp(0.0, 1.0);
        let mut last: Option<usize> = None;
        let mut best: Option<usize> = None;
        for (l, iv) in ivs.iter().enumerate() {
            if iv.width() <= 0.0 {
                continue;
            }
            if last.is_none_or(|k| iv.b > ivs[k].b) {
                last = Some(l);
            }
            if u >= iv.a && u < iv.b {
                best = Some(l);
            }
        }
        best.or(last).unwrap_or(0)
    }
}

/// Orders levels by descending training proportion (lowest index first on
/// ties) and assigns each a sub-interval of `[0, 1]` as wide as its proportion.
pub fn fit_band(train: &Dataset, plan: &EncodingPlan) -> Result<BandCodec> {
    plan.check_schema(train)?;
    if train.is_empty() {
        return Err(invalid!("cannot fit band intervals on an empty dataset"));
    }
    let n = train.n_rows() as f64;
    let mut intervals = Vec::new();
    for block in plan.band_layout().discrete_blocks() {
        let coding = &plan.columns()[block.source];
        let mut counts = vec![0usize; block.levels];
        for cell in train.column(block.source) {
            let l = level_of(coding, block.kind, cell).ok_or_else(|| invalid!("missing value in a non-nullable column"))?;
            counts[l] += 1;
        }
        let mut order: Vec<usize> = (0..block.levels).collect();
        order.sort_by(|&x, &y| counts[y].cmp(&counts[x]).then(x.cmp(&y)));
        let mut ivs = vec![BandInterval { a: 0.0, b: 0.0 }; block.levels];
        let mut acc = 0usize;
        for &l in &order {
            let a = acc as f64 / n;
            acc += counts[l];
            ivs[l] = BandInterval { a, b: acc as f64 / n };
        }
        intervals.push(ivs);
    }
    BandCodec::from_parts(plan, intervals)
}

/// Encodes every block into one column; discrete cells become Gaussian draws
/// centred on their level's interval with standard deviation width / 6.
pub fn band_encode(d: &Dataset, plan: &EncodingPlan, codec: &BandCodec, seed: u64) -> Result<EncodedMatrix> {
    plan.check_schema(d)?;
    let layout = plan.band_layout().clone();
    let mut values = Tensor::zeros(d.n_rows(), layout.width);
    let mut r = rng::seeded(seed);
    let mut discrete = 0;
    for block in &layout.blocks {
        let coding = &plan.columns()[block.source];
        if block.kind == BlockKind::Numeric {
            for (i, v) in filled_numeric(d, block.source, &mut r).into_iter().enumerate() {
                values.set(i, block.offset, if v.is_nan() { 0.5 } else { scale(coding, v) });
            }
            continue;
        }
        let ivs = &codec.intervals[discrete];
        discrete += 1;
        for (i, cell) in d.column(block.source).enumerate() {
            let l = level_of(coding, block.kind, cell).ok_or_else(|| Error::Cell {
                row: i,
                column: plan.schema().column(block.source).name.clone(),
                msg: "missing value in a non-nullable column".into(),
            })?;
            let iv = ivs[l];
            let mid = 0.5 * (iv.a + iv.b);
            let u = if iv.width() > 0.0 {
                let normal = Normal::new(mid, iv.width() / 6.0).map_err(|e| invalid!("{e}"))?;
                normal.sample(&mut r).clamp(0.0, 1.0)
            } else {
                mid
            };
            values.set(i, block.offset, u);
        }
    }
    EncodedMatrix::new(values, layout)
}

/// Decodes a band matrix by locating each discrete entry's interval.
pub fn band_decode(m: &EncodedMatrix, plan: &EncodingPlan, codec: &BandCodec) -> Result<Dataset> {
    if m.layout.encoding != Encoding::Band || *m.layout != **plan.band_layout() {
        return Err(invalid!("matrix layout does not match the plan's band layout"));
    }
    if !m.values.is_finite() {
        return Err(invalid!("encoded matrix contains non-finite entries"));
    }
    // Block indices handed to `pick` count all blocks; map them to discrete ones.
    let mut discrete_index = vec![usize::MAX; m.layout.blocks.len()];
    let mut k = 0;
    for (bi, b) in m.layout.blocks.iter().enumerate() {
        if b.kind != BlockKind::Numeric {
            discrete_index[bi] = k;
            k += 1;
        }
    }
    decode_with(m, plan, |bi, block, row| codec.level_at(discrete_index[bi], row[block.offset]))
}
