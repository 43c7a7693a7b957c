//! Schema, typed rows, dataset splitting and the surrogate record generator.

mod dataset;
mod schema;
mod surrogate;

pub use dataset::{split_dataset, Cell, Dataset};
pub use schema::{ColumnKind, ColumnSpec, Schema, SegmentRef};
pub use surrogate::{col, make_surrogate, pnr_schema, COUNTRIES};
