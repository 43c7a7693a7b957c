//! Small numeric kernels shared across modules.

/// Squared Euclidean distance, accumulated in independent lanes so the loop vectorizes.
pub fn sqdist(x: &[f64], y: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let (xc, yc) = (x.chunks_exact(LANES), y.chunks_exact(LANES));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(p, q)| (p - q) * (p - q)).sum();
    for (p, q) in xc.zip(yc) {
        for l in 0..LANES {
            let d = p[l] - q[l];
            acc[l] += d * d;
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}
