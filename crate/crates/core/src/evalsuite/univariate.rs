use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::data::{Cell, ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Summary of one numeric column over its non-missing cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericStats {
    pub count: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (divisor `n − 1`; 0 for a single value).
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
}

/// Level frequencies of a categorical column, `Missing` listed last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoricalStats {
    pub levels: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FeatureStats {
    Numeric(NumericStats),
    Categorical(CategoricalStats),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnivariatePair {
    pub column: String,
    pub real: FeatureStats,
    pub synthetic: FeatureStats,
}

/// Quantile of sorted values by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn numeric_stats(values: impl Iterator<Item = Cell>) -> NumericStats {
    let mut missing = 0;
    let mut xs: Vec<f64> = Vec::new();
    for c in values {
        match c.as_f64() {
            Some(v) => xs.push(v),
            None => missing += 1,
        }
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return NumericStats { count: 0, missing, mean: None, std: None, min: None, q25: None, q50: None, q75: None, max: None };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    NumericStats {
        count: n,
        missing,
        mean: Some(mean),
        std: Some(libm::sqrt(var)),
        min: Some(xs[0]),
        q25: Some(quantile(&xs, 0.25)),
        q50: Some(quantile(&xs, 0.5)),
        q75: Some(quantile(&xs, 0.75)),
        max: Some(xs[n - 1]),
    }
}

fn feature_stats(d: &Dataset, j: usize) -> FeatureStats {
    match &d.schema().column(j).kind {
        ColumnKind::Numerical { .. } => FeatureStats::Numeric(numeric_stats(d.column(j))),
        ColumnKind::Categorical { levels } | ColumnKind::Binary { levels } => {
            let mut counts = alloc::vec![0usize; levels.len() + 1];
            for c in d.column(j) {
                counts[c.as_level().unwrap_or(levels.len())] += 1;
            }
            let n = d.n_rows().max(1) as f64;
            let names = levels.iter().map(String::as_str).chain(core::iter::once("Missing"));
            FeatureStats::Categorical(CategoricalStats {
                levels: names.zip(counts).map(|(l, c)| (l.to_string(), c as f64 / n)).collect(),
            })
        }
    }
}

/// Per-column statistics of two datasets with the same schema.
pub fn univariate_report(real: &Dataset, synth: &Dataset) -> Result<Vec<UnivariatePair>> {
    if real.schema() != synth.schema() {
        return Err(Error::Schema("univariate report needs datasets with the same schema".into()));
    }
    Ok((0..real.n_cols())
        .map(|j| UnivariatePair {
            column: real.schema().column(j).name.clone(),
            real: feature_stats(real, j),
            synthetic: feature_stats(synth, j),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{col, make_surrogate};

    #[test]
    fn identical_inputs_give_identical_stats() {
        let d = make_surrogate(500, 3);
        for p in univariate_report(&d, &d).unwrap() {
            assert_eq!(p.real, p.synthetic);
        }
    }

    #[test]
    fn numeric_summary_values() {
        let cells = [1.0, 2.0, 3.0, 4.0].map(Cell::Numeric).into_iter().chain([Cell::Missing]);
        let s = numeric_stats(cells);
        assert_eq!((s.count, s.missing), (4, 1));
        assert_eq!(s.mean, Some(2.5));
        assert!((s.std.unwrap() - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
        assert_eq!((s.min, s.q25, s.q50, s.q75, s.max), (Some(1.0), Some(1.75), Some(2.5), Some(3.25), Some(4.0)));
        let c = numeric_stats([Cell::Numeric(7.0); 5].into_iter());
        assert_eq!(c.std, Some(0.0));
        assert!([c.min, c.q25, c.q50, c.q75, c.max].iter().all(|v| *v == Some(7.0)));
    }

    #[test]
    fn categorical_frequencies_include_missing() {
        let d = make_surrogate(1000, 4);
        let rep = univariate_report(&d, &d).unwrap();
        let FeatureStats::Categorical(g) = &rep[col::GENDER].real else { panic!("gender is categorical") };
        assert_eq!(g.levels.last().unwrap().0, "Missing");
        assert!((g.levels.iter().map(|l| l.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let FeatureStats::Numeric(age) = &rep[col::AGE].real else { panic!("age is numeric") };
        assert_eq!(age.count + age.missing, 1000);
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let d = make_surrogate(10, 1);
        let other = d.without_column(0).unwrap();
        assert!(univariate_report(&d, &other).is_err());
    }
}
