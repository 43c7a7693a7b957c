//! Classical learners and tests used by the evaluation suite.

mod forest;
mod knn;
mod logreg;
mod stats;

pub use forest::{accuracy, rf_fit_predict, ForestConfig, ForestModel};
pub use knn::{knn_neighbors, nearest_distances, Neighbor};
pub use logreg::{logreg_fit_predict, LogReg, LogRegConfig};
pub use stats::{average_ranks, kolmogorov_q, ks_two_sample, wilcoxon_one_sided, TestResult};
