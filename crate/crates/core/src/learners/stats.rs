use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::kernels::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(t) = P(K > t)`.
///
/// Uses the alternating series `2 Σ (−1)^{j−1} e^{−2j²t²}` for `t ≥ 1` and the
/// equivalent theta-function form of the CDF below that, where the series
/// converges too slowly.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let q = if t >= 1.0 {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = libm::exp(-2.0 * jf * jf * t * t);
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-10 * sum.abs() {
                break;
            }
        }
        2.0 * sum
    } else {
        let c = core::f64::consts::PI * core::f64::consts::PI / (8.0 * t * t);
        let mut sum = 0.0;
        for j in 1..=100 {
            let odd = (2 * j - 1) as f64;
            let term = libm::exp(-odd * odd * c);
            sum += term;
            if term < 1e-10 * sum {
                break;
            }
        }
        1.0 - libm::sqrt(2.0 * core::f64::consts::PI) / t * sum
    };
    q.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid!("KS test needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid!("KS test samples contain NaN"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let p = kolmogorov_q(d * libm::sqrt(nf * mf / (nf + mf)));
    Ok(TestResult { statistic: d, p_value: p })
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut s = 0;
    while s < order.len() {
        let mut e = s + 1;
        while e < order.len() && values[order[e]] == values[order[s]] {
            e += 1;
        }
        let r = (s + e + 1) as f64 / 2.0;
        for &k in &order[s..e] {
            ranks[k] = r;
        }
        s = e;
    }
    ranks
}

/// One-sided Wilcoxon signed-rank test against the alternative that the
/// differences tend to be negative.
///
/// Zero differences are dropped; the statistic is the positive rank sum and
/// the p-value is its lower tail under the normal approximation, with tie
/// correction and a continuity correction of ½.
pub fn wilcoxon_one_sided(diffs: &[f64]) -> Result<TestResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(invalid!("Wilcoxon differences must be finite"));
    }
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nz.is_empty() {
        return Err(invalid!("all Wilcoxon differences are zero"));
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nz.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut s = 0;
    while s < sorted.len() {
        let mut e = s + 1;
        while e < sorted.len() && sorted[e] == sorted[s] {
            e += 1;
        }
        let t = (e - s) as f64;
        tie_term += t * t * t - t;
        s = e;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var > 0.0 { normal_cdf((w - mean + 0.5) / libm::sqrt(var)) } else { 1.0 };
    Ok(TestResult { statistic: w, p_value: p.clamp(0.0, 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;
    use rand::Rng as _;

    fn ecdf_scan(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn ks_examples() {
        let a = [1.0, 2.0, 3.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = ks_two_sample(&a, &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_eq!(r.statistic, ecdf_scan(&a, &[4.0, 5.0, 6.0]));
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn ks_matches_ecdf_scan_with_ties() {
        let mut r = rng::seeded(2);
        for _ in 0..50 {
            let n = r.random_range(1..12);
            let m = r.random_range(1..12);
            let a: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
            let b: Vec<f64> = (0..m).map(|_| r.random_range(0..6) as f64).collect();
            let got = ks_two_sample(&a, &b).unwrap().statistic;
            assert!((got - ecdf_scan(&a, &b)).abs() < 1e-15);
            assert_eq!(got, ks_two_sample(&b, &a).unwrap().statistic);
            let ea: Vec<f64> = a.iter().map(|v| libm::exp(*v)).collect();
            let eb: Vec<f64> = b.iter().map(|v| libm::exp(*v)).collect();
            assert_eq!(got, ks_two_sample(&ea, &eb).unwrap().statistic);
        }
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(t) at the usual critical points: 1.3581 ↔ 0.05, 1.6276 ↔ 0.01.
        assert!((kolmogorov_q(1.3580986) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_q(1.6276236) - 0.01).abs() < 1e-6);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        // Both branches agree where they meet.
        let below = kolmogorov_q(1.0 - 1e-12);
        assert!((below - kolmogorov_q(1.0)).abs() < 1e-9);
        assert!((kolmogorov_q(0.5) - 0.963945243).abs() < 1e-8);
    }

    fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
        let n = ranks.len();
        let mut hits = 0usize;
        for mask in 0u32..(1 << n) {
            let s: f64 = (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
            if s <= w + 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn wilcoxon_normal_approximation_tracks_exact_distribution() {
        let mut r = rng::seeded(10);
        for _ in 0..30 {
            let diffs: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..0.6)).collect();
            let res = wilcoxon_one_sided(&diffs).unwrap();
            let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
            let exact = exact_lower_tail(&ranks, res.statistic);
            assert!((res.p_value - exact).abs() <= 0.03, "{} vs {exact}", res.p_value);
        }
    }

    #[test]
    fn wilcoxon_examples() {
        let sym: Vec<f64> = (1..=10).flat_map(|i| [i as f64, -(i as f64)]).collect();
        let p = wilcoxon_one_sided(&sym).unwrap().p_value;
        assert!((p - 0.5).abs() <= 0.05);
        let neg: Vec<f64> = (1..=20).map(|i| -(i as f64)).collect();
        assert!(wilcoxon_one_sided(&neg).unwrap().p_value < 0.001);
        assert!(wilcoxon_one_sided(&[0.0, 0.0]).is_err());
        let mut with_zeros = sym.clone();
        with_zeros.extend([0.0; 5]);
        assert_eq!(wilcoxon_one_sided(&with_zeros).unwrap(), wilcoxon_one_sided(&sym).unwrap());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
