//! Maps typed rows into the unit interval and back.
//!
//! Numeric columns are min-max scaled with the training bounds. Categorical
//! columns are one-hot encoded; nullable ones get an extra `UNK` level that
//! stands for a missing value. A missing numeric cell is filled with a value
//! drawn from the same column and flagged in a two-level indicator block
//! (`not-filled`, `filled`) that is treated like any categorical block.
//!
//! The [`BandCodec`] is the alternative single-column encoding: each level owns
//! a sub-interval of `[0, 1]` as wide as its training frequency and a cell is
//! replaced by a Gaussian draw centred on that interval.

mod band;
mod codec;
mod plan;

pub use band::{band_decode, band_encode, fit_band, BandCodec, BandInterval};
pub use codec::{decode, encode, EncodedMatrix};
pub use plan::{fit_plan, Block, BlockKind, ColumnCoding, Encoding, EncodingPlan, Layout, UNK};
