use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Graph, NodeId, Op};
use super::tensor::Tensor;
use crate::error::{Error, Result};

impl Graph {
    /// Appends the reverse-mode gradient of the scalar `output` with respect to
    /// each node in `wrt`, returning the gradient nodes in the same order.
    ///
    /// Gradients are ordinary nodes, so `grad` may be applied again to any
    /// expression built from them. A node `output` does not depend on gets a
    /// zero constant.
    pub fn grad(&mut self, output: NodeId, wrt: &[NodeId]) -> Result<Vec<NodeId>> {
        if output.0 >= self.nodes.len() {
            return Err(Error::Shape(format!("node {} does not exist", output.0)));
        }
        if self.shape(output) != (1, 1) {
            let (r, c) = self.shape(output);
            return Err(Error::Shape(format!("gradient of a non-scalar {r}x{c} output")));
        }
        let n = output.0 + 1;

        // Nodes through which some `wrt` node influences the output.
        let mut relevant = vec![false; n];
        for w in wrt {
            if w.0 < n {
                relevant[w.0] = true;
            }
        }
        for i in 0..n {
            let node = &self.nodes[i];
            if !relevant[i]
                && !matches!(node.op, Op::LeakyReluSlope(_))
                && node.inputs.iter().any(|inp| relevant[inp.0])
            {
                relevant[i] = true;
            }
        }

        let mut adjoint: Vec<Option<NodeId>> = vec![None; n];
        if relevant[output.0] {
            adjoint[output.0] = Some(self.constant(Tensor::scalar(1.0)));
        }
        for i in (0..n).rev() {
            let Some(upstream) = adjoint[i] else { continue };
            let node = &self.nodes[i];
            if node.inputs.is_empty() {
                continue;
            }
            let op = node.op.clone();
            let inputs = node.inputs.clone();
            let needs: Vec<bool> = inputs.iter().map(|inp| relevant[inp.0]).collect();
            let contributions = self.backward(&op, NodeId(i), &inputs, &needs, upstream)?;
            for (k, c) in contributions {
                let target = inputs[k].0;
                adjoint[target] = Some(match adjoint[target] {
                    None => c,
                    Some(prev) => self.add(prev, c)?,
                });
            }
        }

        wrt.iter()
            .map(|w| match adjoint.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let (r, c) = self.shape(*w);
                    Ok(self.constant(Tensor::zeros(r, c)))
                }
            })
            .collect()
    }

    /// Gradient contributions `(input position, node)` of one node given its adjoint.
    fn backward(
        &mut self,
        op: &Op,
        y: NodeId,
        x: &[NodeId],
        needs: &[bool],
        g: NodeId,
    ) -> Result<Vec<(usize, NodeId)>> {
        let mut out = Vec::with_capacity(x.len());
        match *op {
            Op::Param(_) | Op::Data(_) | Op::Const(_) | Op::LeakyReluSlope(_) => {}
            Op::MatMul { ta, tb } => {
                let (a, b) = (x[0], x[1]);
                if needs[0] {
                    let ga = match (ta, tb) {
                        (false, false) => self.matmul_t(g, b, false, true)?,
                        (true, false) => self.matmul_t(b, g, false, true)?,
                        (false, true) => self.matmul_t(g, b, false, false)?,
                        (true, true) => self.matmul_t(b, g, true, true)?,
                    };
                    out.push((0, ga));
                }
                if needs[1] {
                    let gb = match (ta, tb) {
                        (false, false) => self.matmul_t(a, g, true, false)?,
                        (true, false) => self.matmul_t(a, g, false, false)?,
                        (false, true) => self.matmul_t(g, a, true, false)?,
                        (true, true) => self.matmul_t(g, a, true, true)?,
                    };
                    out.push((1, gb));
                }
            }
            Op::Add | Op::Sub => {
                if needs[0] {
                    out.push((0, self.sum_to(g, self.shape(x[0]))?));
                }
                if needs[1] {
                    let gb = self.sum_to(g, self.shape(x[1]))?;
                    let gb = if matches!(op, Op::Sub) { self.neg(gb)? } else { gb };
                    out.push((1, gb));
                }
            }
            Op::Mul => {
                if needs[0] {
                    let t = self.mul(g, x[1])?;
                    out.push((0, self.sum_to(t, self.shape(x[0]))?));
                }
                if needs[1] {
                    let t = self.mul(g, x[0])?;
                    out.push((1, self.sum_to(t, self.shape(x[1]))?));
                }
            }
            Op::Div => {
                if needs[0] {
                    let t = self.div(g, x[1])?;
                    out.push((0, self.sum_to(t, self.shape(x[0]))?));
                }
                if needs[1] {
                    // d(a/b)/db = -(a/b)/b
                    let gy = self.mul(g, y)?;
                    let t = self.div(gy, x[1])?;
                    let t = self.sum_to(t, self.shape(x[1]))?;
                    out.push((1, self.neg(t)?));
                }
            }
            Op::Scale(c) => out.push((0, self.scale(g, c)?)),
            Op::AddScalar(_) => out.push((0, g)),
            Op::LeakyRelu(s) => {
                let slope = self.leaky_relu_slope(x[0], s)?;
                out.push((0, self.mul(g, slope)?));
            }
            Op::Sigmoid => {
                let one_minus = self.neg(y)?;
                let one_minus = self.add_scalar(one_minus, 1.0)?;
                let d = self.mul(y, one_minus)?;
                out.push((0, self.mul(g, d)?));
            }
            Op::RowSoftmax => {
                let gy = self.mul(g, y)?;
                let s = self.sum_cols(gy)?;
                let centered = self.sub(g, s)?;
                out.push((0, self.mul(y, centered)?));
            }
            Op::Square => {
                let two_x = self.scale(x[0], 2.0)?;
                out.push((0, self.mul(g, two_x)?));
            }
            Op::SqrtEps(_) => {
                let half = self.scale(g, 0.5)?;
                out.push((0, self.div(half, y)?));
            }
            Op::RowL2Norm(_) => {
                let w = self.div(g, y)?;
                out.push((0, self.mul(x[0], w)?));
            }
            Op::PairwiseSqDist => {
                // D_ij = |a_i - b_j|^2: dA = 2 (rowsum(G) ⊙ A - G B), dB = 2 (colsum(G)ᵀ ⊙ B - Gᵀ A)
                let (a, b) = (x[0], x[1]);
                if needs[0] {
                    let rs = self.sum_cols(g)?;
                    let ra = self.mul(rs, a)?;
                    let gb = self.matmul(g, b)?;
                    let d = self.sub(ra, gb)?;
                    out.push((0, self.scale(d, 2.0)?));
                }
                if needs[1] {
                    let gt = self.transpose(g)?;
                    let cs = self.sum_cols(gt)?;
                    let cb = self.mul(cs, b)?;
                    let ga = self.matmul_t(g, a, true, false)?;
                    let d = self.sub(cb, ga)?;
                    out.push((1, self.scale(d, 2.0)?));
                }
            }
            Op::Concat => {
                let mut off = 0;
                for (k, &inp) in x.iter().enumerate() {
                    let w = self.shape(inp).1;
                    if needs[k] {
                        out.push((k, self.slice_cols(g, off, off + w)?));
                    }
                    off += w;
                }
            }
            Op::SliceCols { start, .. } => {
                let total = self.shape(x[0]).1;
                out.push((0, self.pad_cols(g, start, total)?));
            }
            Op::PadCols { start, .. } => {
                let w = self.shape(x[0]).1;
                out.push((0, self.slice_cols(g, start, start + w)?));
            }
            Op::Transpose => out.push((0, self.transpose(g)?)),
            Op::MeanAll => {
                let (r, c) = self.shape(x[0]);
                let scaled = self.scale(g, 1.0 / (r * c) as f64)?;
                out.push((0, self.broadcast_to(scaled, r, c)?));
            }
            Op::SumAll | Op::SumRows | Op::SumCols => {
                let (r, c) = self.shape(x[0]);
                out.push((0, self.broadcast_to(g, r, c)?));
            }
            Op::BroadcastTo { .. } => out.push((0, self.sum_to(g, self.shape(x[0]))?)),
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{eval, Bindings};
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    fn scalar_eval(g: &Graph, data: &[Tensor], node: NodeId) -> f64 {
        eval(g, &Bindings::new(&[], data), &[node]).unwrap()[0].item()
    }

    /// Central differences of `output` with respect to every entry of data leaf `leaf`.
    fn numeric_grad(g: &Graph, data: &[Tensor], output: NodeId, leaf: usize) -> Tensor {
        let h = 1e-5;
        let mut out = Tensor::zeros(data[leaf].rows(), data[leaf].cols());
        for e in 0..data[leaf].len() {
            let mut plus = data.to_vec();
            plus[leaf].as_mut_slice()[e] += h;
            let mut minus = data.to_vec();
            minus[leaf].as_mut_slice()[e] -= h;
            out.as_mut_slice()[e] = (scalar_eval(g, &plus, output) - scalar_eval(g, &minus, output)) / (2.0 * h);
        }
        out
    }

    fn rel_err(a: &Tensor, n: &Tensor) -> f64 {
        a.max_abs_diff(n) / n.max_abs().max(1e-8)
    }

    #[test]
    fn square_and_cube_derivatives() {
        let mut g = Graph::new();
        let x = g.data("x", 1, 1);
        let sq = g.square(x).unwrap();
        let d_sq = g.grad(sq, &[x]).unwrap()[0];
        let data = [Tensor::scalar(3.0)];
        assert_eq!(scalar_eval(&g, &data, d_sq), 6.0);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let mut g = Graph::new();
        let x = g.data("x", 2, 2);
        let y = g.data("y", 1, 3);
        let s = g.sum_all(x).unwrap();
        let gy = g.grad(s, &[y]).unwrap()[0];
        let data = [Tensor::zeros(2, 2), Tensor::filled(1, 3, 1.0)];
        let out = eval(&g, &Bindings::new(&[], &data), &[gy]).unwrap();
        assert_eq!(out[0], Tensor::zeros(1, 3));
        assert!(g.grad(x, &[x]).is_err());
    }

    #[test]
    fn small_network_matches_finite_differences() {
        let mut r = rng::seeded(3);
        let mut rand_t = |rows, cols| Tensor::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
        let data = [rand_t(4, 3), rand_t(3, 5), rand_t(1, 5), rand_t(2, 5)];
        let mut g = Graph::new();
        let x = g.data("x", 4, 3);
        let w = g.data("w", 3, 5);
        let b = g.data("b", 1, 5);
        let other = g.data("o", 2, 5);
        let h = g.affine(x, w, b).unwrap();
        let h = g.leaky_relu(h, 0.2).unwrap();
        let sm = g.row_softmax(h).unwrap();
        let d = g.pairwise_distance(sm, other).unwrap();
        let loss = g.mean_all(d).unwrap();
        let grads = g.grad(loss, &[x, w, b, other]).unwrap();
        let analytic = eval(&g, &Bindings::new(&[], &data), &grads).unwrap();
        for (leaf, a) in analytic.iter().enumerate() {
            let n = numeric_grad(&g, &data, loss, leaf);
            assert!(rel_err(a, &n) < 1e-6, "leaf {leaf}: {}", rel_err(a, &n));
        }
    }
}
