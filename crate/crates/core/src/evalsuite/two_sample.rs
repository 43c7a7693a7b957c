use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::learners::{accuracy, rf_fit_predict, ForestConfig, LogReg, LogRegConfig};
use crate::preprocess::{encode, fit_plan};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Rf,
    Logreg,
}

/// Accuracy of a classifier separating real (label 0) from synthetic (label 1)
/// rows on a held-out half; 1/2 when the two are indistinguishable.
///
/// Both sides are subsampled to the same size, then each is split in half
/// between training and testing.
pub fn two_sample_score(real: &Dataset, synth: &Dataset, learner: Learner, forest: &ForestConfig, seed: u64) -> Result<f64> {
    let n = real.n_rows().min(synth.n_rows());
    if n < 4 {
        return Err(invalid!("two-sample test needs at least 4 rows per side, got {n}"));
    }
    let mut r = rng::seeded(seed);
    let mut pick = |d: &Dataset| {
        let mut idx: Vec<usize> = (0..d.n_rows()).collect();
        idx.shuffle(&mut r);
        idx.truncate(n);
        idx
    };
    let (ri, si) = (pick(real), pick(synth));
    let n_train = n / 2;
    let train_x = real.select(&ri[..n_train]).concat(&synth.select(&si[..n_train]))?;
    let test_x = real.select(&ri[n_train..]).concat(&synth.select(&si[n_train..]))?;
    let labels = |k: usize| -> Vec<usize> { (0..2 * k).map(|i| usize::from(i >= k)).collect() };
    let train_y = labels(n_train);
    let test_y = labels(n - n_train);
    let pred = match learner {
        Learner::Rf => rf_fit_predict(&train_x, &train_y, &test_x, forest, rng::derive(seed, 1))?,
        Learner::Logreg => {
            let plan = fit_plan(&real.concat(synth)?)?;
            let a = encode(&train_x, &plan, rng::derive(seed, 2))?.values;
            let b = encode(&test_x, &plan, rng::derive(seed, 3))?.values;
            let cfg = LogRegConfig { l2: 1.0 / train_y.len() as f64, ..Default::default() };
            LogReg::fit(&a, &train_y, &cfg)?.predict(&b)?
        }
    };
    Ok(accuracy(&pred, &test_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{col, make_surrogate, Cell};

    fn shifted(d: &Dataset) -> Dataset {
        let rows = d.rows().map(|r| {
            let mut r = r.to_vec();
            if let Cell::Numeric(v) = r[col::ANTICIPATION] {
                // Stays inside the schema range but far above the bulk of the real values.
                r[col::ANTICIPATION] = Cell::Numeric(v * 0.1 + 300.0);
            }
            r
        });
        Dataset::from_rows(d.schema().clone(), rows.collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn null_case_is_near_half() {
        let d = make_surrogate(4000, 1);
        let (a, b) = crate::data::split_dataset(&d, 0.5, 2).unwrap();
        let acc = two_sample_score(&a, &b, Learner::Rf, &ForestConfig::default(), 3).unwrap();
        assert!((acc - 0.5).abs() <= 0.05, "{acc}");
    }

    #[test]
    fn separable_case_is_near_one() {
        let d = make_surrogate(1000, 1);
        let s = shifted(&make_surrogate(1000, 2));
        for learner in [Learner::Rf, Learner::Logreg] {
            let acc = two_sample_score(&d, &s, learner, &ForestConfig::default(), 3).unwrap();
            assert!(acc >= 0.99, "{learner:?} {acc}");
        }
    }

    #[test]
    fn too_few_rows() {
        let d = make_surrogate(3, 1);
        assert!(two_sample_score(&d, &d, Learner::Rf, &ForestConfig::default(), 0).is_err());
    }
}
