use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::Tensor;
use crate::error::{invalid, Result};

/// Stopping rule and penalty for [`LogReg::fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    /// Weight of `½‖w‖²` added to the mean log-loss; the intercept is not penalized.
    pub l2: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { l2: 1.0, tol: 1e-6, max_steps: 10_000 }
    }
}

/// Binary L2-regularized logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Gradient norm at termination.
    pub grad_norm: f64,
    pub steps: usize,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Gradient of the objective at `theta = (w, b)`.
fn gradient(x: &Tensor, y: &[usize], theta: &[f64], l2: f64, out: &mut [f64]) {
    let (n, p) = x.shape();
    out.iter_mut().for_each(|g| *g = 0.0);
    for (i, &label) in y.iter().enumerate() {
        let row = x.row(i);
        let t = row.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + theta[p];
        let r = sigmoid(t) - label as f64;
        for (g, a) in out.iter_mut().zip(row) {
            *g += r * a;
        }
        out[p] += r;
    }
    for (j, g) in out.iter_mut().enumerate() {
        *g /= n as f64;
        if j < p {
            *g += l2 * theta[j];
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum())
}

impl LogReg {
    /// Minimizes the regularized log-loss by accelerated gradient descent with
    /// per-coordinate steps `1 / D_jj`, where `D` bounds the Hessian from above.
    pub fn fit(x: &Tensor, y: &[usize], cfg: &LogRegConfig) -> Result<Self> {
        let (n, p) = x.shape();
        if n != y.len() || n == 0 {
            return Err(invalid!("{} rows but {} labels", n, y.len()));
        }
        if !x.is_finite() {
            return Err(invalid!("logistic regression features must be finite"));
        }
        if y.iter().any(|&c| c > 1) {
            return Err(invalid!("logistic regression labels must be 0 or 1"));
        }
        if cfg.l2.is_nan() || cfg.l2 < 0.0 {
            return Err(invalid!("l2 penalty must be non-negative"));
        }
        // Hessian ≤ ¼·E[x̃x̃ᵀ] + l2·I (x̃ = x with a trailing 1); each row's
        // absolute sum bounds that matrix (diagonal dominance).
        let mut second = vec![0.0; (p + 1) * (p + 1)];
        for i in 0..n {
            let row = x.row(i);
            for a in 0..=p {
                let xa = if a < p { row[a] } else { 1.0 };
                for b in 0..=p {
                    let xb = if b < p { row[b] } else { 1.0 };
                    second[a * (p + 1) + b] += xa * xb;
                }
            }
        }
        let step: Vec<f64> = (0..=p)
            .map(|a| {
                let bound = 0.25 * second[a * (p + 1)..(a + 1) * (p + 1)].iter().map(|v| v.abs()).sum::<f64>() / n as f64
                    + if a < p { cfg.l2 } else { 0.0 };
                if bound > 0.0 {
                    1.0 / bound
                } else {
                    0.0
                }
            })
            .collect();

        let mut theta = vec![0.0; p + 1];
        let mut prev = theta.clone();
        let mut look = theta.clone();
        let mut g = vec![0.0; p + 1];
        let mut t_k = 1.0f64;
        let mut steps = 0;
        gradient(x, y, &theta, cfg.l2, &mut g);
        let mut gnorm = norm(&g);
        while gnorm > cfg.tol && steps < cfg.max_steps {
            gradient(x, y, &look, cfg.l2, &mut g);
            prev.copy_from_slice(&theta);
            for j in 0..=p {
                theta[j] = look[j] - step[j] * g[j];
            }
            // Restart momentum whenever the step opposes the gradient.
            let uphill: f64 = g.iter().zip(theta.iter().zip(&prev)).map(|(gj, (a, b))| gj * (a - b)).sum();
            let t_next = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t_k * t_k)) };
            let beta = if uphill > 0.0 { 0.0 } else { (t_k - 1.0) / t_next };
            for j in 0..=p {
                look[j] = theta[j] + beta * (theta[j] - prev[j]);
            }
            t_k = t_next;
            steps += 1;
            gradient(x, y, &theta, cfg.l2, &mut g);
            gnorm = norm(&g);
        }
        let intercept = theta.pop().expect("intercept slot");
        Ok(LogReg { weights: theta, intercept, grad_norm: gnorm, steps })
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept)
    }

    /// Class 1 when the probability is at least 0.5.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        if x.cols() != self.weights.len() {
            return Err(invalid!("{} features, model has {}", x.cols(), self.weights.len()));
        }
        if !x.is_finite() {
            return Err(invalid!("logistic regression features must be finite"));
        }
        Ok((0..x.rows()).map(|i| usize::from(self.probability(x.row(i)) >= 0.5)).collect())
    }
}

pub fn logreg_fit_predict(train_x: &Tensor, train_y: &[usize], test_x: &Tensor, cfg: &LogRegConfig) -> Result<Vec<usize>> {
    LogReg::fit(train_x, train_y, cfg)?.predict(test_x)
}
