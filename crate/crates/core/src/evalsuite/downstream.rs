use alloc::vec::Vec;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{accuracy, rf_fit_predict, ForestConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownstreamResult {
    pub target: alloc::string::String,
    /// Accuracy on the real test rows of a forest trained on real rows.
    pub acc_real: f64,
    /// Same, trained on synthetic rows.
    pub acc_synth: f64,
}

/// Splits a categorical target from the features; Missing becomes an extra class.
pub fn features_and_labels(d: &Dataset, target: usize) -> Result<(Dataset, Vec<usize>)> {
    let levels = d
        .schema()
        .column(target)
        .levels()
        .ok_or_else(|| Error::Schema(alloc::format!("target `{}` is not categorical", d.schema().column(target).name)))?
        .len();
    let y = d.column(target).map(|c| c.as_level().unwrap_or(levels)).collect();
    Ok((d.without_column(target)?, y))
}

/// Accuracy on `real_test` of forests trained on `real_train` and on `synth_train`.
pub fn downstream_cross_eval(
    real_train: &Dataset,
    synth_train: &Dataset,
    real_test: &Dataset,
    target: &str,
    forest: &ForestConfig,
    seed: u64,
) -> Result<DownstreamResult> {
    let j = real_train
        .schema()
        .index_of(target)
        .ok_or_else(|| Error::Schema(alloc::format!("target column `{target}` is not in the schema")))?;
    if synth_train.schema() != real_train.schema() || real_test.schema() != real_train.schema() {
        return Err(Error::Schema("downstream datasets must share one schema".into()));
    }
    let (rx, ry) = features_and_labels(real_train, j)?;
    let (sx, sy) = features_and_labels(synth_train, j)?;
    let (tx, ty) = features_and_labels(real_test, j)?;
    let acc_real = accuracy(&rf_fit_predict(&rx, &ry, &tx, forest, seed)?, &ty);
    let acc_synth = accuracy(&rf_fit_predict(&sx, &sy, &tx, forest, seed)?, &ty);
    Ok(DownstreamResult { target: target.into(), acc_real, acc_synth })
}
