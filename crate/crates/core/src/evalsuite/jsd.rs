use alloc::vec::Vec;

use crate::autodiff::Tensor;
use crate::error::{invalid, Result};
use crate::learners::knn_neighbors;

/// Point-wise discrepancy `1 − H₂(p)` in bits: 0 at `p = ½`, 1 at `p ∈ {0, 1}`.
pub fn local_discrepancy(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * libm::log2(q) };
    (1.0 - h(p) - h(1.0 - p)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsdResult {
    /// Mean of `deltas`, in bits.
    pub jsd: f64,
    /// One entry per pooled point, real rows first.
    pub deltas: Vec<f64>,
    /// Fraction of synthetic points among each pooled point's neighbors.
    pub synth_fraction: Vec<f64>,
}

/// Jensen-Shannon divergence between two point sets estimated from the label
/// mix of each pooled point's `k_nn` nearest neighbors (self excluded).
pub fn jsd_local(real: &Tensor, synth: &Tensor, k_nn: usize) -> Result<JsdResult> {
    if real.rows() == 0 || synth.rows() == 0 {
        return Err(invalid!("JSD needs two non-empty point sets"));
    }
    if real.cols() != synth.cols() {
        return Err(invalid!("point sets have dimensions {} and {}", real.cols(), synth.cols()));
    }
    let n = real.rows() + synth.rows();
    if k_nn == 0 || k_nn >= n {
        return Err(invalid!("k_nn must lie in 1..{n}, got {k_nn}"));
    }
    let mut pooled = real.as_slice().to_vec();
    pooled.extend_from_slice(synth.as_slice());
    let pooled = Tensor::new(n, real.cols(), pooled)?;
    let n_real = real.rows();
    let mut deltas = Vec::with_capacity(n);
    let mut fractions = Vec::with_capacity(n);
    for i in 0..n {
        let nb = knn_neighbors(&pooled, pooled.row(i), k_nn, Some(i))?;
        let p = nb.iter().filter(|x| x.index >= n_real).count() as f64 / k_nn as f64;
        fractions.push(p);
        deltas.push(local_discrepancy(p));
    }
    let jsd = deltas.iter().sum::<f64>() / n as f64;
    Ok(JsdResult { jsd, deltas, synth_fraction: fractions })
}
