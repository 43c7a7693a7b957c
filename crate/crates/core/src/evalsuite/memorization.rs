use alloc::vec::Vec;

use serde::Serialize;

use crate::autodiff::Tensor;
use crate::error::{invalid, Result};
use crate::learners::{ks_two_sample, nearest_distances, wilcoxon_one_sided, TestResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemorizationReport {
    /// Nearest-neighbor distance of each synthetic point to the training set.
    #[serde(skip)]
    pub d_train: Vec<f64>,
    /// Nearest-neighbor distance of each synthetic point to the test set.
    #[serde(skip)]
    pub d_test: Vec<f64>,
    pub mean_d_train: f64,
    pub mean_d_test: f64,
    pub ks: TestResult,
    /// One-sided test that synthetic points sit closer to training points.
    pub wilcoxon: TestResult,
}

/// Compares how close synthetic points come to training versus held-out points.
///
/// When every paired difference is zero there is no evidence in either
/// direction and the Wilcoxon result is reported as statistic 0, p-value 1.
pub fn memorization_report(synth: &Tensor, train: &Tensor, test: &Tensor) -> Result<MemorizationReport> {
    if synth.rows() == 0 || train.rows() == 0 || test.rows() == 0 {
        return Err(invalid!("memorization report needs non-empty point sets"));
    }
    let d_train = nearest_distances(train, synth)?;
    let d_test = nearest_distances(test, synth)?;
    let ks = ks_two_sample(&d_train, &d_test)?;
    let diffs: Vec<f64> = d_train.iter().zip(&d_test).map(|(a, b)| a - b).collect();
    let wilcoxon = if diffs.iter().all(|&d| d == 0.0) {
        TestResult { statistic: 0.0, p_value: 1.0 }
    } else {
        wilcoxon_one_sided(&diffs)?
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(MemorizationReport { mean_d_train: mean(&d_train), mean_d_test: mean(&d_test), d_train, d_test, ks, wilcoxon })
}
