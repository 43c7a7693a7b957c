use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Graph, NodeId, Op};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Values for the leaves of a graph, indexed in declaration order.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub params: &'a [Tensor],
    pub data: &'a [Tensor],
}

impl<'a> Bindings<'a> {
    pub fn new(params: &'a [Tensor], data: &'a [Tensor]) -> Self {
        Bindings { params, data }
    }
}

fn check_bindings(g: &Graph, b: &Bindings) -> Result<()> {
    let check = |kind: &str, specs: &[(alloc::string::String, (usize, usize))], given: &[Tensor]| {
        if specs.len() != given.len() {
            return Err(Error::Shape(format!("{} {kind} leaves but {} tensors bound", specs.len(), given.len())));
        }
        for ((name, shape), t) in specs.iter().zip(given) {
            if *shape != t.shape() {
                return Err(Error::Shape(format!(
                    "{kind} `{name}` declared {}x{} but bound {}x{}",
                    shape.0,
                    shape.1,
                    t.rows(),
                    t.cols()
                )));
            }
        }
        Ok(())
    };
    check("param", &g.params, b.params)?;
    check("data", &g.data, b.data)
}

/// Evaluates `outputs`, computing each required node exactly once.
///
/// Fails with [`Error::NonFinite`] naming the first node whose value contains
/// NaN or infinity.
pub fn eval(g: &Graph, b: &Bindings, outputs: &[NodeId]) -> Result<Vec<Tensor>> {
    check_bindings(g, b)?;
    let n = g.nodes.len();
    let mut needed = vec![false; n];
    for o in outputs {
        if o.0 >= n {
            return Err(Error::Shape(format!("node {} does not exist", o.0)));
        }
        needed[o.0] = true;
    }
    for i in (0..n).rev() {
        if needed[i] {
            for inp in &g.nodes[i].inputs {
                needed[inp.0] = true;
            }
        }
    }

    // Remaining consumers per node; a value is dropped after its last use.
    let mut uses = vec![0usize; n];
    for (node, _) in g.nodes.iter().zip(&needed).filter(|(_, &need)| need) {
        for inp in &node.inputs {
            uses[inp.0] += 1;
        }
    }
    for o in outputs {
        uses[o.0] += 1;
    }

    let mut vals: Vec<Option<Cow<'_, Tensor>>> = vec![None; n];
    for i in 0..n {
        if !needed[i] {
            continue;
        }
        let node = &g.nodes[i];
        let arg = |k: usize| -> &Tensor { vals[node.inputs[k].0].as_deref().expect("inputs precede their users") };
        let v: Cow<'_, Tensor> = match &node.op {
            Op::Param(p) => Cow::Borrowed(&b.params[*p]),
            Op::Data(d) => Cow::Borrowed(&b.data[*d]),
            Op::Const(t) => Cow::Borrowed(t),
            op => {
                let inputs: Vec<&Tensor> = (0..node.inputs.len()).map(arg).collect();
                let out = apply(op, &inputs, node.shape);
                if !out.is_finite() {
                    return Err(Error::NonFinite { node: i, op: op.name() });
                }
                Cow::Owned(out)
            }
        };
        vals[i] = Some(v);
        for inp in &node.inputs {
            uses[inp.0] -= 1;
            if uses[inp.0] == 0 {
                vals[inp.0] = None;
            }
        }
    }
    Ok(outputs.iter().map(|o| vals[o.0].as_deref().unwrap().clone()).collect())
}

fn apply(op: &Op, x: &[&Tensor], shape: (usize, usize)) -> Tensor {
    match op {
        Op::Param(_) | Op::Data(_) | Op::Const(_) => unreachable!("leaves are bound, not computed"),
        Op::MatMul { ta, tb } => matmul(x[0], x[1], *ta, *tb),
        Op::Add => zip_broadcast(x[0], x[1], shape, |a, b| a + b),
        Op::Sub => zip_broadcast(x[0], x[1], shape, |a, b| a - b),
        Op::Mul => zip_broadcast(x[0], x[1], shape, |a, b| a * b),
        Op::Div => zip_broadcast(x[0], x[1], shape, |a, b| a / b),
        Op::Scale(c) => x[0].map(|v| c * v),
        Op::AddScalar(c) => x[0].map(|v| v + c),
        Op::LeakyRelu(s) => x[0].map(|v| if v > 0.0 { v } else { s * v }),
        Op::LeakyReluSlope(s) => x[0].map(|v| if v > 0.0 { 1.0 } else { *s }),
        Op::Sigmoid => x[0].map(sigmoid),
        Op::RowSoftmax => row_softmax(x[0]),
        Op::Square => x[0].map(|v| v * v),
        Op::SqrtEps(eps) => x[0].map(|v| libm::sqrt(v + eps)),
        Op::RowL2Norm(eps) => {
            let t = x[0];
            Tensor::from_fn(t.rows(), 1, |i, _| libm::sqrt(t.row(i).iter().map(|v| v * v).sum::<f64>() + eps))
        }
        Op::PairwiseSqDist => pairwise_sqdist(x[0], x[1]),
        Op::Concat => {
            let mut out = Tensor::zeros(shape.0, shape.1);
            for i in 0..shape.0 {
                let row = out.row_mut(i);
                let mut off = 0;
                for part in x {
                    let src = part.row(i);
                    row[off..off + src.len()].copy_from_slice(src);
                    off += src.len();
                }
            }
            out
        }
        Op::SliceCols { start, end } => {
            let mut out = Tensor::zeros(shape.0, shape.1);
            for i in 0..shape.0 {
                out.row_mut(i).copy_from_slice(&x[0].row(i)[*start..*end]);
            }
            out
        }
        Op::PadCols { start, total } => {
            let mut out = Tensor::zeros(shape.0, *total);
            let w = x[0].cols();
            for i in 0..shape.0 {
                out.row_mut(i)[*start..start + w].copy_from_slice(x[0].row(i));
            }
            out
        }
        Op::Transpose => Tensor::from_fn(shape.0, shape.1, |i, j| x[0].get(j, i)),
        Op::MeanAll => Tensor::scalar(x[0].as_slice().iter().sum::<f64>() / x[0].len() as f64),
        Op::SumAll => Tensor::scalar(x[0].as_slice().iter().sum()),
        Op::SumRows => {
            let t = x[0];
            let mut out = Tensor::zeros(1, t.cols());
            for i in 0..t.rows() {
                for (o, v) in out.as_mut_slice().iter_mut().zip(t.row(i)) {
                    *o += v;
                }
            }
            out
        }
        Op::SumCols => {
            let t = x[0];
            Tensor::from_fn(t.rows(), 1, |i, _| t.row(i).iter().sum())
        }
        Op::BroadcastTo { rows, cols } => zip_broadcast(x[0], x[0], (*rows, *cols), |a, _| a),
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + libm::exp(-v))
    } else {
        let e = libm::exp(v);
        e / (1.0 + e)
    }
}

pub(crate) fn row_softmax(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for i in 0..t.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

fn zip_broadcast(a: &Tensor, b: &Tensor, shape: (usize, usize), f: impl Fn(f64, f64) -> f64) -> Tensor {
    let (rows, cols) = shape;
    if a.shape() == shape && b.shape() == shape {
        let data = a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(rows, cols, data).unwrap();
    }
    let mut out = Tensor::zeros(rows, cols);
    for i in 0..rows {
        let ar = a.row(if a.rows() == 1 { 0 } else { i });
        let br = b.row(if b.rows() == 1 { 0 } else { i });
        let row = out.row_mut(i);
        match (ar.len() == cols, br.len() == cols) {
            (true, true) => row.iter_mut().zip(ar.iter().zip(br)).for_each(|(o, (&x, &y))| *o = f(x, y)),
            (true, false) => row.iter_mut().zip(ar).for_each(|(o, &x)| *o = f(x, br[0])),
            (false, true) => row.iter_mut().zip(br).for_each(|(o, &y)| *o = f(ar[0], y)),
            (false, false) => row.iter_mut().for_each(|o| *o = f(ar[0], br[0])),
        }
    }
    out
}

/// `op(a) · op(b)` through the blocked kernels of `matrixmultiply`.
pub(crate) fn matmul(a: &Tensor, b: &Tensor, ta: bool, tb: bool) -> Tensor {
    let (m, k) = if ta { (a.cols(), a.rows()) } else { (a.rows(), a.cols()) };
    let n = if tb { b.rows() } else { b.cols() };
    let mut c = Tensor::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let (rsa, csa) = if ta { (1, a.cols() as isize) } else { (a.cols() as isize, 1) };
    let (rsb, csb) = if tb { (1, b.cols() as isize) } else { (b.cols() as isize, 1) };
    assert!(a.len() == m * k && b.len() == k * n);
    // SAFETY: the strides above address exactly the `m·k`, `k·n` and `m·n`
    // elements of the three buffers, whose lengths were just checked.
    #[allow(unsafe_code)]
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_slice().as_ptr(),
            rsa,
            csa,
            b.as_slice().as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_slice().as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

// Differences are formed explicitly (not via ‖a‖² + ‖b‖² − 2a·b) so that
// coincident rows give exactly zero.
fn pairwise_sqdist(a: &Tensor, b: &Tensor) -> Tensor {
    Tensor::from_fn(a.rows(), b.rows(), |i, j| crate::kernels::sqdist(a.row(i), b.row(j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn sigmoid_softmax_identity() {
        let mut g = Graph::new();
        let x = g.data("x", 1, 2);
        let s = g.sigmoid(x).unwrap();
        let sm = g.row_softmax(x).unwrap();
        let a = g.data("a", 2, 3);
        let eye = g.constant(Tensor::identity(2));
        let ia = g.matmul(eye, a).unwrap();
        let data = [t(&[&[0.0, 0.0]]), t(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]])];
        let out = eval(&g, &Bindings::new(&[], &data), &[s, sm, ia]).unwrap();
        assert_eq!(out[0].as_slice(), &[0.5, 0.5]);
        assert_eq!(out[1].as_slice(), &[0.5, 0.5]);
        assert_eq!(out[2], data[1]);
    }

    #[test]
    fn transposed_products() {
        let a = t(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let b = t(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 3.0]]);
        let ab = matmul(&a, &b, false, false);
        assert_eq!(ab, t(&[&[1.0, 2.0, 8.0], &[3.0, 4.0, 18.0], &[5.0, 6.0, 28.0]]));
        let at = Tensor::from_fn(2, 3, |i, j| a.get(j, i));
        let bt = Tensor::from_fn(3, 2, |i, j| b.get(j, i));
        assert_eq!(matmul(&at, &b, true, false), ab);
        assert_eq!(matmul(&a, &bt, false, true), ab);
        assert_eq!(matmul(&at, &bt, true, true), ab);
    }

    #[test]
    fn broadcasting_and_reductions() {
        let mut g = Graph::new();
        let x = g.data("x", 2, 3);
        let r = g.constant(t(&[&[10.0, 20.0, 30.0]]));
        let c = g.constant(t(&[&[1.0], &[2.0]]));
        let xr = g.add(x, r).unwrap();
        let xc = g.mul(x, c).unwrap();
        let sr = g.sum_rows(x).unwrap();
        let sc = g.sum_cols(x).unwrap();
        let m = g.mean_all(x).unwrap();
        let data = [t(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]])];
        let out = eval(&g, &Bindings::new(&[], &data), &[xr, xc, sr, sc, m]).unwrap();
        assert_eq!(out[0].as_slice(), &[11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
        assert_eq!(out[1].as_slice(), &[1.0, 2.0, 3.0, 8.0, 10.0, 12.0]);
        assert_eq!(out[2].as_slice(), &[5.0, 7.0, 9.0]);
        assert_eq!(out[3].as_slice(), &[6.0, 15.0]);
        assert_eq!(out[4].item(), 3.5);
    }

    #[test]
    fn slicing_concat_padding() {
        let mut g = Graph::new();
        let x = g.data("x", 2, 3);
        let s = g.slice_cols(x, 1, 3).unwrap();
        let p = g.pad_cols(s, 1, 4).unwrap();
        let c = g.concat(&[s, x]).unwrap();
        let data = [t(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]])];
        let out = eval(&g, &Bindings::new(&[], &data), &[s, p, c]).unwrap();
        assert_eq!(out[0].as_slice(), &[2.0, 3.0, 5.0, 6.0]);
        assert_eq!(out[1].as_slice(), &[0.0, 2.0, 3.0, 0.0, 0.0, 5.0, 6.0, 0.0]);
        assert_eq!(out[2].as_slice(), &[2.0, 3.0, 1.0, 2.0, 3.0, 5.0, 6.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn errors_are_reported() {
        let mut g = Graph::new();
        let x = g.data("x", 1, 2);
        let y = g.data("y", 3, 3);
        assert!(g.matmul(x, x).is_err());
        assert!(g.add(x, y).is_err());
        let s = g.sqrt(x).unwrap();
        let bad = [t(&[&[-1.0, 4.0]]), Tensor::zeros(3, 3)];
        let err = eval(&g, &Bindings::new(&[], &bad), &[s]).unwrap_err();
        assert_eq!(err, Error::NonFinite { node: s.index(), op: "sqrt" });
        let wrong = [Tensor::zeros(2, 2), Tensor::zeros(3, 3)];
        assert!(matches!(eval(&g, &Bindings::new(&[], &wrong), &[s]), Err(Error::Shape(_))));
    }
}
