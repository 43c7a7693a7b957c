use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::autodiff::Tensor;
use crate::error::{invalid, Error, Result};
use crate::kernels::sqdist;
use crate::rng;

pub const MDS_TOL: f64 = 1e-10;
pub const MDS_MAX_ITER: usize = 10_000;

fn matvec(b: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = b[i * n..(i + 1) * n].iter().zip(v).map(|(a, x)| a * x).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Classical MDS to two dimensions.
///
/// Double-centres the squared-distance matrix, `B = −½ J D² J`, finds its two
/// leading eigenpairs by power iteration with deflation and returns the
/// eigenvectors scaled by the square roots of the (clamped non-negative)
/// eigenvalues, as an `(n, 2)` tensor.
pub fn mds_2d(points: &Tensor) -> Result<Tensor> {
    let n = points.rows();
    if n < 3 {
        return Err(invalid!("MDS needs at least 3 points, got {n}"));
    }
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = sqdist(points.row(i), points.row(j));
            b[i * n + j] = d;
            b[j * n + i] = d;
        }
    }
    let row_mean: Vec<f64> = (0..n).map(|i| b[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (b[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let scale = libm::sqrt(b.iter().map(|v| v * v).sum::<f64>());
    let mut out = Tensor::zeros(n, 2);
    if scale == 0.0 {
        return Ok(out);
    }

    let mut r = rng::seeded(0x6d64_7332);
    let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2);
    let mut w = vec![0.0; n];
    for comp in 0..2 {
        let mut v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let nv = libm::sqrt(dot(&v, &v));
        v.iter_mut().for_each(|x| *x /= nv);
        let mut converged = None;
        let mut residual = f64::INFINITY;
        for _ in 0..MDS_MAX_ITER {
            matvec(&b, n, &v, &mut w);
            for (lam, u) in &found {
                let c = lam * dot(u, &v);
                w.iter_mut().zip(u).for_each(|(wi, ui)| *wi -= c * ui);
            }
            let lambda = dot(&v, &w);
            residual = libm::sqrt(w.iter().zip(&v).map(|(a, x)| (a - lambda * x) * (a - lambda * x)).sum());
            if residual <= MDS_TOL * scale {
                converged = Some(lambda);
                break;
            }
            let nw = libm::sqrt(dot(&w, &w));
            v.iter_mut().zip(&w).for_each(|(x, a)| *x = a / nw);
        }
        let Some(lambda) = converged else {
            return Err(Error::NoConvergence(format!(
                "MDS component {comp}: residual {residual:e} after {MDS_MAX_ITER} iterations"
            )));
        };
        // Fix the sign so the largest-magnitude entry is positive.
        let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s = libm::sqrt(lambda.max(0.0));
        for (i, vi) in v.iter().enumerate() {
            out.set(i, comp, s * vi);
        }
        found.push((lambda, v));
    }
    Ok(out)
}
