use alloc::vec::Vec;

use super::net::{declare, CriticArch};
use crate::autodiff::{eval, Bindings, Graph, NodeId, Tensor};
use crate::error::{invalid, Result};

/// Scalar loss nodes of one objective.
#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub loss_g: NodeId,
    pub loss_d: NodeId,
    pub gp: NodeId,
}

/// Builds a row-wise function of an input batch (the critic) into `g`.
pub type CriticFn<'a> = dyn FnMut(&mut Graph, NodeId) -> Result<NodeId> + 'a;

fn row_mean(g: &mut Graph, a: NodeId) -> Result<NodeId> {
    let n = g.shape(a).1 as f64;
    let s = g.sum_cols(a)?;
    g.scale(s, 1.0 / n)
}

/// `f̂(v) = mean_j ‖hv − hy′_j‖ − mean_j ‖hv − hx′_j‖`, one entry per row of `hv`.
pub fn fhat(g: &mut Graph, hv: NodeId, hx2: NodeId, hy2: NodeId) -> Result<NodeId> {
    let dy = g.pairwise_distance(hv, hy2)?;
    let dx = g.pairwise_distance(hv, hx2)?;
    let my = row_mean(g, dy)?;
    let mx = row_mean(g, dx)?;
    g.sub(my, mx)
}

/// Two-sided penalty `mean (‖∇f(x̂)‖ − 1)²` on `x̂ = ε·x + (1 − ε)·y`, with one
/// `ε` per row, where `f` maps a batch to one value per row.
pub fn gradient_penalty(
    g: &mut Graph,
    f: &mut dyn FnMut(&mut Graph, NodeId) -> Result<NodeId>,
    x: NodeId,
    y: NodeId,
    eps: NodeId,
) -> Result<NodeId> {
    let diff = g.sub(x, y)?;
    let step = g.mul(eps, diff)?;
    let xhat = g.add(y, step)?;
    let fx = f(g, xhat)?;
    let total = g.sum_all(fx)?;
    let grad = g.grad(total, &[xhat])?[0];
    let norm = g.row_l2norm(grad)?;
    let centered = g.add_scalar(norm, -1.0)?;
    let sq = g.square(centered)?;
    g.mean_all(sq)
}

fn check_batches(g: &Graph, batches: &[NodeId]) -> Result<()> {
    let shape = g.shape(batches[0]);
    if shape.0 == 0 {
        return Err(invalid!("empty batch"));
    }
    if batches.iter().any(|b| g.shape(*b) != shape) {
        return Err(invalid!("batches must have equal shapes"));
    }
    Ok(())
}

/// Cramér objective on real batches `x`, `x2` and generated batches `y`, `y2`.
///
/// `loss_g = mean f̂(x) − mean f̂(y)` and `loss_d = −loss_g + λ·gp`.
#[allow(clippy::too_many_arguments)]
pub fn cramer_graph(
    g: &mut Graph,
    h: &mut CriticFn,
    x: NodeId,
    x2: NodeId,
    y: NodeId,
    y2: NodeId,
    eps: NodeId,
    lambda: f64,
) -> Result<LossNodes> {
    check_batches(g, &[x, x2, y, y2])?;
    let hx = h(g, x)?;
    let hx2 = h(g, x2)?;
    let hy = h(g, y)?;
    let hy2 = h(g, y2)?;
    let fx = fhat(g, hx, hx2, hy2)?;
    let fy = fhat(g, hy, hx2, hy2)?;
    let mfx = g.mean_all(fx)?;
    let mfy = g.mean_all(fy)?;
    let loss_g = g.sub(mfx, mfy)?;
    let mut f = |g: &mut Graph, v: NodeId| {
        let hv = h(g, v)?;
        fhat(g, hv, hx2, hy2)
    };
    let gp = gradient_penalty(g, &mut f, x, y, eps)?;
    let neg = g.neg(loss_g)?;
    let pen = g.scale(gp, lambda)?;
    let loss_d = g.add(neg, pen)?;
    Ok(LossNodes { loss_g, loss_d, gp })
}

/// WGAN objective with a scalar critic: `loss_d = mean s(y) − mean s(x) + λ·gp`,
/// `loss_g = −mean s(y)`.
pub fn wgan_graph(g: &mut Graph, score: &mut CriticFn, x: NodeId, y: NodeId, eps: NodeId, lambda: f64) -> Result<LossNodes> {
    check_batches(g, &[x, y])?;
    let sx = score(g, x)?;
    let sy = score(g, y)?;
    let mx = g.mean_all(sx)?;
    let my = g.mean_all(sy)?;
    let raw = g.sub(my, mx)?;
    let loss_g = g.neg(my)?;
    let gp = gradient_penalty(g, score, x, y, eps)?;
    let pen = g.scale(gp, lambda)?;
    let loss_d = g.add(raw, pen)?;
    Ok(LossNodes { loss_g, loss_d, gp })
}

/// Loss values `(loss_g, loss_d, gp)`.
pub type Losses = (f64, f64, f64);

fn run(g: &Graph, params: &[Tensor], data: &[Tensor], l: LossNodes) -> Result<Losses> {
    let v = eval(g, &Bindings::new(params, data), &[l.loss_g, l.loss_d, l.gp])?;
    Ok((v[0].item(), v[1].item(), v[2].item()))
}

/// Evaluates the Cramér losses for a critic with the given parameters.
#[allow(clippy::too_many_arguments)]
pub fn cramer_losses(
    critic: &CriticArch,
    params: &[Tensor],
    x: &Tensor,
    x2: &Tensor,
    y: &Tensor,
    y2: &Tensor,
    eps: &Tensor,
    lambda: f64,
) -> Result<Losses> {
    let mut g = Graph::new();
    let ids = declare(&mut g, &critic.specs());
    let leaves: Vec<NodeId> =
        [x, x2, y, y2, eps].iter().enumerate().map(|(i, t)| g.data(["x", "x2", "y", "y2", "eps"][i], t.rows(), t.cols())).collect();
    let mut h = |g: &mut Graph, v: NodeId| critic.build_h(g, &ids, v);
    let l = cramer_graph(&mut g, &mut h, leaves[0], leaves[1], leaves[2], leaves[3], leaves[4], lambda)?;
    run(&g, params, &[x.clone(), x2.clone(), y.clone(), y2.clone(), eps.clone()], l)
}

/// Evaluates the WGAN losses for a critic with a score head.
pub fn wgan_losses(critic: &CriticArch, params: &[Tensor], x: &Tensor, y: &Tensor, eps: &Tensor, lambda: f64) -> Result<Losses> {
    let mut g = Graph::new();
    let ids = declare(&mut g, &critic.specs());
    let xn = g.data("x", x.rows(), x.cols());
    let yn = g.data("y", y.rows(), y.cols());
    let en = g.data("eps", eps.rows(), eps.cols());
    let mut s = |g: &mut Graph, v: NodeId| critic.build_score(g, &ids, v);
    let l = wgan_graph(&mut g, &mut s, xn, yn, en, lambda)?;
    run(&g, params, &[x.clone(), y.clone(), eps.clone()], l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::net::init_params;
    use crate::gan::{GanConfig, Variant};
    use crate::preprocess::{fit_plan, Layout};
    use crate::rng;
    use alloc::sync::Arc;
    use alloc::vec;
    use rand::Rng as _;

    fn small_critic(mode: Variant, seed: u64) -> (CriticArch, Vec<Tensor>, Arc<Layout>) {
        let plan = fit_plan(&crate::data::make_surrogate(200, 9)).unwrap();
        let cfg = GanConfig { h_widths: vec![16, 8], ..GanConfig::for_variant(mode) };
        let layout = plan.layout_for(cfg.encoding.layout_encoding()).clone();
        let critic = CriticArch::new(&cfg, layout.clone()).unwrap();
        let params = init_params(&critic.specs(), &mut rng::seeded(seed));
        (critic, params, layout)
    }

    fn batch(r: &mut rng::Rng, m: usize, d: usize) -> Tensor {
        Tensor::from_fn(m, d, |_, _| r.random::<f64>())
    }

    fn h_rows(critic: &CriticArch, params: &[Tensor], x: &Tensor) -> Vec<Vec<f64>> {
        // One row at a time, so no batched kernel is shared with the loss graph.
        (0..x.rows())
            .map(|i| {
                let mut g = Graph::new();
                let ids = declare(&mut g, &critic.specs());
                let v = g.data("v", 1, x.cols());
                let h = critic.build_h(&mut g, &ids, v).unwrap();
                let row = x.select_rows(&[i]);
                eval(&g, &Bindings::new(params, &[row]), &[h]).unwrap()[0].as_slice().to_vec()
            })
            .collect()
    }

    fn naive_loss_g(critic: &CriticArch, params: &[Tensor], b: [&Tensor; 4]) -> f64 {
        let [x, x2, y, y2] = b.map(|t| h_rows(critic, params, t));
        let dist = |a: &[f64], b: &[f64]| {
            libm::sqrt(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() + crate::autodiff::SQRT_EPS)
        };
        let f = |v: &[f64]| {
            let mut sy = 0.0;
            for w in &y2 {
                sy += dist(v, w);
            }
            let mut sx = 0.0;
            for w in &x2 {
                sx += dist(v, w);
            }
            sy / y2.len() as f64 - sx / x2.len() as f64
        };
        let mut total_x = 0.0;
        for v in &x {
            total_x += f(v);
        }
        let mut total_y = 0.0;
        for v in &y {
            total_y += f(v);
        }
        total_x / x.len() as f64 - total_y / y.len() as f64
    }

    #[test]
    fn loss_g_matches_double_loop() {
        let (critic, params, layout) = small_critic(Variant::CrganCnet, 4);
        let mut r = rng::seeded(77);
        for _ in 0..5 {
            let b: Vec<Tensor> = (0..4).map(|_| batch(&mut r, 8, layout.width)).collect();
            let eps = batch(&mut r, 8, 1);
            let (lg, ..) = cramer_losses(&critic, &params, &b[0], &b[1], &b[2], &b[3], &eps, 10.0).unwrap();
            let naive = naive_loss_g(&critic, &params, [&b[0], &b[1], &b[2], &b[3]]);
            assert!((lg - naive).abs() <= 1e-9, "{lg} vs {naive}");
        }
    }

    #[test]
    fn symmetric_and_singleton_cases() {
        let (critic, params, layout) = small_critic(Variant::CrganFc, 2);
        let mut r = rng::seeded(1);
        let a = batch(&mut r, 6, layout.width);
        let eps = batch(&mut r, 6, 1);
        let (lg, ..) = cramer_losses(&critic, &params, &a, &a, &a, &a, &eps, 10.0).unwrap();
        assert_eq!(lg, 0.0);

        let a = batch(&mut r, 1, layout.width);
        let b = batch(&mut r, 1, layout.width);
        let e = Tensor::scalar(0.3);
        let (lg, ld, gp) = cramer_losses(&critic, &params, &a, &a, &b, &b, &e, 10.0).unwrap();
        let ha = &h_rows(&critic, &params, &a)[0];
        let hb = &h_rows(&critic, &params, &b)[0];
        let d = libm::sqrt(ha.iter().zip(hb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() + crate::autodiff::SQRT_EPS);
        let self_d = libm::sqrt(crate::autodiff::SQRT_EPS);
        // f̂(a) = d − ε½ and f̂(b) = ε½ − d.
        assert!((lg - 2.0 * (d - self_d)).abs() < 1e-12);
        assert!((ld - (-lg + 10.0 * gp)).abs() < 1e-12);
    }

    #[test]
    fn penalty_vanishes_for_unit_gradient_affine_function() {
        let mut g = Graph::new();
        let x = g.data("x", 5, 3);
        let y = g.data("y", 5, 3);
        let e = g.data("eps", 5, 1);
        // f(v) = v · a + 7 with ‖a‖ = 1.
        let a = g.constant(Tensor::new(3, 1, vec![0.6, 0.0, 0.8]).unwrap());
        let mut f = |g: &mut Graph, v: NodeId| {
            let p = g.matmul(v, a)?;
            g.add_scalar(p, 7.0)
        };
        let gp = gradient_penalty(&mut g, &mut f, x, y, e).unwrap();
        let mut r = rng::seeded(3);
        let data = [batch(&mut r, 5, 3), batch(&mut r, 5, 3), batch(&mut r, 5, 1)];
        let v = eval(&g, &Bindings::new(&[], &data), &[gp]).unwrap()[0].item();
        assert!(v.abs() < 1e-20, "{v}");
        // Finite differences confirm the unit gradient norm of the same function.
        let fv = |p: [f64; 3]| 0.6 * p[0] + 0.8 * p[2] + 7.0;
        let h = 1e-5;
        let gx = (fv([0.1 + h, 0.2, 0.3]) - fv([0.1 - h, 0.2, 0.3])) / (2.0 * h);
        let gz = (fv([0.1, 0.2, 0.3 + h]) - fv([0.1, 0.2, 0.3 - h])) / (2.0 * h);
        assert!((libm::sqrt(gx * gx + gz * gz) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let (critic, params, layout) = small_critic(Variant::CrganCnet, 8);
        let d = layout.width;
        let mut r = rng::seeded(12);
        let x2 = batch(&mut r, 4, d);
        let y2 = batch(&mut r, 4, d);
        let v0 = batch(&mut r, 1, d);
        let mut g = Graph::new();
        let ids = declare(&mut g, &critic.specs());
        let v = g.data("v", 1, d);
        let xn = g.data("x2", 4, d);
        let yn = g.data("y2", 4, d);
        let hv = critic.build_h(&mut g, &ids, v).unwrap();
        let hx = critic.build_h(&mut g, &ids, xn).unwrap();
        let hy = critic.build_h(&mut g, &ids, yn).unwrap();
        let f = fhat(&mut g, hv, hx, hy).unwrap();
        let s = g.sum_all(f).unwrap();
        let gr = g.grad(s, &[v]).unwrap()[0];
        let at = |vv: Tensor| eval(&g, &Bindings::new(&params, &[vv, x2.clone(), y2.clone()]), &[s, gr]).unwrap();
        let analytic = at(v0.clone()).remove(1);
        let h = 1e-5;
        let mut worst = 0.0f64;
        for j in 0..d {
            let mut p = v0.clone();
            p.set(0, j, v0.get(0, j) + h);
            let mut m = v0.clone();
            m.set(0, j, v0.get(0, j) - h);
            let fd = (at(p)[0].item() - at(m)[0].item()) / (2.0 * h);
            worst = worst.max((fd - analytic.get(0, j)).abs());
        }
        assert!(worst / analytic.max_abs().max(1e-8) <= 1e-4, "{worst}");
    }

    #[test]
    fn wgan_examples() {
        let (critic, mut params, layout) = small_critic(Variant::WganFc, 3);
        let mut r = rng::seeded(5);
        let x = batch(&mut r, 7, layout.width);
        let y = batch(&mut r, 7, layout.width);
        let eps = batch(&mut r, 7, 1);
        let (lg, ld, gp) = wgan_losses(&critic, &params, &x, &x, &eps, 0.0).unwrap();
        assert_eq!(ld, 0.0);
        assert!(lg.is_finite() && gp >= 0.0);

        let (_, base, _) = wgan_losses(&critic, &params, &x, &y, &eps, 0.0).unwrap();
        let n = params.len();
        let w = params[n - 2].map(|v| 2.0 * v);
        params[n - 2] = w;
        let (_, doubled, _) = wgan_losses(&critic, &params, &x, &y, &eps, 0.0).unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-12);

        // A constant score has zero gradient, so the penalty is (0 − 1)².
        params[n - 2] = Tensor::zeros(params[n - 2].rows(), 1);
        let (lg, ld, gp) = wgan_losses(&critic, &params, &x, &y, &eps, 10.0).unwrap();
        assert_eq!(lg, -params[n - 1].item());
        assert!((gp - 1.0).abs() < 1e-5);
        assert!((ld - 10.0 * gp).abs() < 1e-12);
    }

    #[test]
    fn empty_and_mismatched_batches_fail() {
        let (critic, params, layout) = small_critic(Variant::CrganFc, 1);
        let a = Tensor::zeros(0, layout.width);
        let e = Tensor::zeros(0, 1);
        assert!(cramer_losses(&critic, &params, &a, &a, &a, &a, &e, 1.0).is_err());
        let b = Tensor::zeros(2, layout.width);
        let c = Tensor::zeros(3, layout.width);
        assert!(cramer_losses(&critic, &params, &b, &b, &c, &c, &Tensor::zeros(2, 1), 1.0).is_err());
    }
}
