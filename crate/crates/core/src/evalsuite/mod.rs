//! Evaluations of synthetic data against real data.
//!
//! Critic-space evaluations (JSD, MDS, memorization) embed rows with the
//! trained critic's `h`, so distances reflect what the critic distinguishes.

mod downstream;
mod jsd;
mod mds;
mod memorization;
mod report;
mod two_sample;
mod univariate;

pub use downstream::{downstream_cross_eval, features_and_labels, DownstreamResult};
pub use jsd::{jsd_local, local_discrepancy, JsdResult};
pub use mds::{mds_2d, MDS_MAX_ITER, MDS_TOL};
pub use memorization::{memorization_report, MemorizationReport};
pub use report::{full_report, EvalConfig, EvalReport, JsdSection, MdsPoint, MdsSection, RowCounts, TwoSampleScores};
pub use two_sample::{two_sample_score, Learner};
pub use univariate::{numeric_stats, quantile, univariate_report, CategoricalStats, FeatureStats, NumericStats, UnivariatePair};
