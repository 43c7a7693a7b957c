use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::downstream::{downstream_cross_eval, DownstreamResult};
use super::jsd::jsd_local;
use super::mds::mds_2d;
use super::memorization::{memorization_report, MemorizationReport};
use super::two_sample::{two_sample_score, Learner};
use super::univariate::{univariate_report, UnivariatePair};
use crate::autodiff::Tensor;
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::gan::{critic_h, generate, GanModel};
use crate::learners::ForestConfig;
use crate::preprocess::EncodingPlan;
use crate::rng;

/// Settings of [`full_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub k_nn: usize,
    /// Independent repetitions whose scalar scores are averaged.
    pub runs: usize,
    /// Cap on points per set embedded for the JSD and memorization tests.
    pub max_points: usize,
    /// Cap on pooled points projected by MDS (its cost is quadratic in memory).
    pub mds_points: usize,
    /// Categorical columns used as downstream prediction targets.
    pub targets: Vec<String>,
    pub forest: ForestConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_nn: 50,
            runs: 1,
            max_points: 12_000,
            mds_points: 1_000,
            targets: vec!["BusinessLeisure".into(), "Nationality".into()],
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowCounts {
    pub train: usize,
    pub test: usize,
    pub synthetic: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSampleScores {
    pub rf: f64,
    pub logreg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsdSection {
    pub k_nn: usize,
    pub points_per_set: usize,
    pub jsd: f64,
    /// Local discrepancy per pooled point (real first), from the first run.
    #[serde(skip)]
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsPoint {
    pub x: f64,
    pub y: f64,
    /// `"real"` or `"synthetic"`.
    pub label: &'static str,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsSection {
    pub points: usize,
    #[serde(skip)]
    pub coords: Vec<MdsPoint>,
}

/// Every evaluation for one trained model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: RowCounts,
    pub runs: usize,
    pub univariate: Vec<UnivariatePair>,
    pub two_sample: TwoSampleScores,
    pub jsd: JsdSection,
    pub mds: MdsSection,
    pub memorization: MemorizationReport,
    pub downstream: Vec<DownstreamResult>,
}

/// Uniformly chosen subset of at most `cap` row indices, in increasing order.
fn subsample(n: usize, cap: usize, r: &mut rng::Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if n > cap {
        idx.shuffle(r);
        idx.truncate(cap);
        idx.sort_unstable();
    }
    idx
}

fn embed(model: &GanModel, plan: &EncodingPlan, d: &Dataset, seed: u64) -> Result<Tensor> {
    critic_h(model, plan, &model.encode(d, plan, seed)?)
}

struct Run {
    univariate: Vec<UnivariatePair>,
    two_sample: TwoSampleScores,
    jsd: JsdSection,
    mds: MdsSection,
    memorization: MemorizationReport,
    downstream: Vec<DownstreamResult>,
}

fn one_run(train: &Dataset, test: &Dataset, model: &GanModel, plan: &EncodingPlan, cfg: &EvalConfig, seed: u64) -> Result<Run> {
    let s = |k| rng::derive(seed, k);
    let synth = generate(model, test.n_rows(), plan, s(0))?;
    let univariate = univariate_report(test, &synth)?;
    let two_sample = TwoSampleScores {
        rf: two_sample_score(test, &synth, Learner::Rf, &cfg.forest, s(1))?,
        logreg: two_sample_score(test, &synth, Learner::Logreg, &cfg.forest, s(2))?,
    };

    let mut r = rng::seeded(s(3));
    let per_set = cfg.max_points.min(test.n_rows()).min(synth.n_rows());
    let real_h = embed(model, plan, &test.select(&subsample(test.n_rows(), per_set, &mut r)), s(4))?;
    let synth_h = embed(model, plan, &synth.select(&subsample(synth.n_rows(), per_set, &mut r)), s(5))?;
    let j = jsd_local(&real_h, &synth_h, cfg.k_nn)?;

    let half = (cfg.mds_points / 2).min(per_set);
    let pick_r = subsample(per_set, half, &mut r);
    let pick_s = subsample(per_set, half, &mut r);
    let mut pooled = real_h.select_rows(&pick_r).into_vec();
    pooled.extend(synth_h.select_rows(&pick_s).into_vec());
    let pooled = Tensor::new(2 * half, real_h.cols(), pooled)?;
    let xy = mds_2d(&pooled)?;
    let coords = (0..2 * half)
        .map(|i| {
            let (label, delta) = if i < half { ("real", j.deltas[pick_r[i]]) } else { ("synthetic", j.deltas[per_set + pick_s[i - half]]) };
            MdsPoint { x: xy.get(i, 0), y: xy.get(i, 1), label, delta }
        })
        .collect();

    // Equal-size training and held-out reference sets.
    let m = train.n_rows().min(test.n_rows()).min(cfg.max_points);
    let train_h = embed(model, plan, &train.select(&subsample(train.n_rows(), m, &mut r)), s(6))?;
    let test_h = embed(model, plan, &test.select(&subsample(test.n_rows(), m, &mut r)), s(7))?;
    let memorization = memorization_report(&synth_h, &train_h, &test_h)?;

    let mut downstream = Vec::new();
    if !cfg.targets.is_empty() {
        let synth_train = generate(model, train.n_rows(), plan, s(8))?;
        for t in &cfg.targets {
            downstream.push(downstream_cross_eval(train, &synth_train, test, t, &cfg.forest, s(9))?);
        }
    }
    Ok(Run {
        univariate,
        two_sample,
        jsd: JsdSection { k_nn: cfg.k_nn, points_per_set: per_set, jsd: j.jsd, deltas: j.deltas },
        mds: MdsSection { points: 2 * half, coords },
        memorization,
        downstream,
    })
}

/// Generates `|real_test|` synthetic rows and runs every evaluation.
///
/// With `cfg.runs > 1` the two-sample scores, JSD and downstream accuracies
/// are averaged over runs; per-point arrays and tests come from the first run.
pub fn full_report(
    real_train: &Dataset,
    real_test: &Dataset,
    model: &GanModel,
    plan: &EncodingPlan,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    if cfg.runs == 0 {
        return Err(invalid!("evaluation needs at least one run"));
    }
    if real_train.is_empty() || real_test.is_empty() {
        return Err(invalid!("evaluation needs non-empty training and test data"));
    }
    let mut first = one_run(real_train, real_test, model, plan, cfg, rng::derive(seed, 0))?;
    if cfg.runs > 1 {
        let mut rf = first.two_sample.rf;
        let mut lr = first.two_sample.logreg;
        let mut jsd = first.jsd.jsd;
        let mut down: Vec<(f64, f64)> = first.downstream.iter().map(|d| (d.acc_real, d.acc_synth)).collect();
        for k in 1..cfg.runs {
            let run = one_run(real_train, real_test, model, plan, cfg, rng::derive(seed, k as u64))?;
            rf += run.two_sample.rf;
            lr += run.two_sample.logreg;
            jsd += run.jsd.jsd;
            for (acc, d) in down.iter_mut().zip(&run.downstream) {
                acc.0 += d.acc_real;
                acc.1 += d.acc_synth;
            }
        }
        let n = cfg.runs as f64;
        first.two_sample = TwoSampleScores { rf: rf / n, logreg: lr / n };
        first.jsd.jsd = jsd / n;
        for (d, acc) in first.downstream.iter_mut().zip(down) {
            d.acc_real = acc.0 / n;
            d.acc_synth = acc.1 / n;
        }
    }
    Ok(EvalReport {
        rows: RowCounts { train: real_train.n_rows(), test: real_test.n_rows(), synthetic: real_test.n_rows() },
        runs: cfg.runs,
        univariate: first.univariate,
        two_sample: first.two_sample,
        jsd: first.jsd,
        mds: first.mds,
        memorization: first.memorization,
        downstream: first.downstream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_surrogate, split_dataset};
    use crate::gan::{train, GanConfig};
    use crate::preprocess::fit_plan;

    #[test]
    fn small_run_has_every_section_and_is_deterministic() {
        let d = make_surrogate(500, 1);
        let (tr, te) = split_dataset(&d, 0.2, 1).unwrap();
        let plan = fit_plan(&tr).unwrap();
        let gcfg = GanConfig { gen_widths: vec![16], h_widths: vec![16, 8], batch_size: 32, iterations: 2, ..GanConfig::default() };
        let (model, _) = train(&tr, &gcfg, &plan, 1).unwrap();
        let cfg = EvalConfig { k_nn: 10, runs: 2, mds_points: 60, forest: ForestConfig { trees: 10, ..Default::default() }, ..Default::default() };
        let rep = full_report(&tr, &te, &model, &plan, &cfg, 3).unwrap();
        assert_eq!(rep.univariate.len(), 12);
        assert_eq!(rep.rows.synthetic, 100);
        assert!((0.0..=1.0).contains(&rep.two_sample.rf) && (0.0..=1.0).contains(&rep.two_sample.logreg));
        assert!((0.0..=1.0).contains(&rep.jsd.jsd));
        assert_eq!(rep.jsd.deltas.len(), 200);
        assert_eq!(rep.mds.coords.len(), 60);
        assert_eq!(rep.memorization.d_train.len(), 100);
        assert_eq!(rep.downstream.len(), 2);
        assert_eq!(rep, full_report(&tr, &te, &model, &plan, &cfg, 3).unwrap());
    }
}
