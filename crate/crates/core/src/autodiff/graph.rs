use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Node kinds. Leaves first, then the differentiable operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// Trainable parameter, bound by index at evaluation.
    Param(usize),
    /// Input data, bound by index at evaluation.
    Data(usize),
    Const(Tensor),
    /// `op(a) · op(b)` where `op` optionally transposes.
    MatMul { ta: bool, tb: bool },
    Add,
    Sub,
    Mul,
    Div,
    Scale(f64),
    AddScalar(f64),
    LeakyRelu(f64),
    /// Derivative of `LeakyRelu`: `1` where the input is positive, the slope elsewhere.
    /// Piecewise constant, so its own gradient is zero.
    LeakyReluSlope(f64),
    Sigmoid,
    RowSoftmax,
    Square,
    /// `sqrt(x + eps)`.
    SqrtEps(f64),
    /// Per-row `sqrt(Σ x² + eps)`, shape `(r, 1)`.
    RowL2Norm(f64),
    /// `D[i][j] = ‖a_i − b_j‖²` for row sets `a` (m×k) and `b` (n×k).
    PairwiseSqDist,
    /// Horizontal concatenation.
    Concat,
    SliceCols { start: usize, end: usize },
    /// Places the input at column `start` of a zero matrix with `total` columns.
    PadCols { start: usize, total: usize },
    Transpose,
    MeanAll,
    SumAll,
    /// Column sums, shape `(1, c)`.
    SumRows,
    /// Row sums, shape `(r, 1)`.
    SumCols,
    BroadcastTo { rows: usize, cols: usize },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::Data(_) => "data",
            Op::Const(_) => "const",
            Op::MatMul { .. } => "matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::LeakyRelu(_) => "leaky_relu",
            Op::LeakyReluSlope(_) => "leaky_relu_slope",
            Op::Sigmoid => "sigmoid",
            Op::RowSoftmax => "row_softmax",
            Op::Square => "square",
            Op::SqrtEps(_) => "sqrt",
            Op::RowL2Norm(_) => "row_l2norm",
            Op::PairwiseSqDist => "pairwise_sqdist",
            Op::Concat => "concat",
            Op::SliceCols { .. } => "slice_columns",
            Op::PadCols { .. } => "pad_columns",
            Op::Transpose => "transpose",
            Op::MeanAll => "mean_all",
            Op::SumAll => "sum_all",
            Op::SumRows => "sum_rows",
            Op::SumCols => "sum_cols",
            Op::BroadcastTo { .. } => "broadcast",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub op: Op,
    pub inputs: Vec<NodeId>,
    pub shape: (usize, usize),
}

/// Append-only computation graph. Node ids are issued in topological order.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    pub(crate) nodes: Vec<Node>,
    pub(crate) params: Vec<(String, (usize, usize))>,
    pub(crate) data: Vec<(String, (usize, usize))>,
}

fn broadcast_dim(a: usize, b: usize) -> Option<usize> {
    if a == b {
        Some(a)
    } else if a == 1 {
        Some(b)
    } else if b == 1 {
        Some(a)
    } else {
        None
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        self.nodes[id.0].shape
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.nodes[id.0].op
    }

    pub fn inputs(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].inputs
    }

    /// Declared parameter leaves as `(name, shape)`, in binding order.
    pub fn param_specs(&self) -> &[(String, (usize, usize))] {
        &self.params
    }

    pub fn data_specs(&self) -> &[(String, (usize, usize))] {
        &self.data
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, shape: (usize, usize)) -> NodeId {
        self.nodes.push(Node { op, inputs, shape });
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> Result<(usize, usize)> {
        self.nodes
            .get(id.0)
            .map(|n| n.shape)
            .ok_or_else(|| Error::Shape(format!("node {} does not exist", id.0)))
    }

    /// New parameter leaf; bound at evaluation by declaration order.
    pub fn param(&mut self, name: &str, rows: usize, cols: usize) -> NodeId {
        let idx = self.params.len();
        self.params.push((name.to_string(), (rows, cols)));
        self.push(Op::Param(idx), vec![], (rows, cols))
    }

    /// New data leaf; bound at evaluation by declaration order.
    pub fn data(&mut self, name: &str, rows: usize, cols: usize) -> NodeId {
        let idx = self.data.len();
        self.data.push((name.to_string(), (rows, cols)));
        self.push(Op::Data(idx), vec![], (rows, cols))
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        let shape = t.shape();
        self.push(Op::Const(t), vec![], shape)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.matmul_t(a, b, false, false)
    }

    /// `op(a) · op(b)` with optional transposes.
    pub fn matmul_t(&mut self, a: NodeId, b: NodeId, ta: bool, tb: bool) -> Result<NodeId> {
        let (ar, ac) = self.check(a)?;
        let (br, bc) = self.check(b)?;
        let (m, k1) = if ta { (ac, ar) } else { (ar, ac) };
        let (k2, n) = if tb { (bc, br) } else { (br, bc) };
        if k1 != k2 {
            return Err(Error::Shape(format!("matmul inner dimensions {k1} and {k2} differ")));
        }
        Ok(self.push(Op::MatMul { ta, tb }, vec![a, b], (m, n)))
    }

    fn binary(&mut self, op: Op, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.check(a)?;
        let (br, bc) = self.check(b)?;
        match (broadcast_dim(ar, br), broadcast_dim(ac, bc)) {
            (Some(r), Some(c)) => Ok(self.push(op, vec![a, b], (r, c))),
            _ => Err(Error::Shape(format!("cannot broadcast {ar}x{ac} with {br}x{bc} in {}", op.name()))),
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(Op::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(Op::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(Op::Div, a, b)
    }

    fn unary(&mut self, op: Op, a: NodeId) -> Result<NodeId> {
        let shape = self.check(a)?;
        Ok(self.push(op, vec![a], shape))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.unary(Op::Scale(c), a)
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId> {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.unary(Op::AddScalar(c), a)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> Result<NodeId> {
        self.unary(Op::LeakyRelu(slope), a)
    }

    pub fn leaky_relu_slope(&mut self, a: NodeId, slope: f64) -> Result<NodeId> {
        self.unary(Op::LeakyReluSlope(slope), a)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Sigmoid, a)
    }

    pub fn row_softmax(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::RowSoftmax, a)
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::Square, a)
    }

    /// `sqrt(a + SQRT_EPS)`.
    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        self.unary(Op::SqrtEps(super::SQRT_EPS), a)
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        Ok(self.push(Op::Transpose, vec![a], (c, r)))
    }

    /// Per-row Euclidean norm (ε-shifted), shape `(r, 1)`.
    pub fn row_l2norm(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, _) = self.check(a)?;
        Ok(self.push(Op::RowL2Norm(super::SQRT_EPS), vec![a], (r, 1)))
    }

    pub fn pairwise_sqdist(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k1) = self.check(a)?;
        let (n, k2) = self.check(b)?;
        if k1 != k2 {
            return Err(Error::Shape(format!("pairwise distance between {k1}- and {k2}-dimensional rows")));
        }
        Ok(self.push(Op::PairwiseSqDist, vec![a, b], (m, n)))
    }

    /// All-pairs Euclidean distances `‖a_i − b_j‖`, ε-shifted, shape `(m, n)`.
    pub fn pairwise_distance(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let d2 = self.pairwise_sqdist(a, b)?;
        self.sqrt(d2)
    }

    /// Row-by-row Euclidean distances `‖a_i − b_i‖`, ε-shifted, shape `(r, 1)`.
    pub fn rowwise_distance(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.check(a)? != self.check(b)? {
            return Err(Error::Shape("rowwise distance needs equal shapes".into()));
        }
        let diff = self.sub(a, b)?;
        self.row_l2norm(diff)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts.first().ok_or_else(|| Error::Shape("empty concatenation".into()))?;
        let rows = self.check(*first)?.0;
        let mut cols = 0;
        for &p in parts {
            let (r, c) = self.check(p)?;
            if r != rows {
                return Err(Error::Shape(format!("concat of {rows}-row and {r}-row blocks")));
            }
            cols += c;
        }
        if parts.len() == 1 {
            return Ok(*first);
        }
        Ok(self.push(Op::Concat, parts.to_vec(), (rows, cols)))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if start >= end || end > c {
            return Err(Error::Shape(format!("column slice {start}..{end} of {c} columns")));
        }
        if start == 0 && end == c {
            return Ok(a);
        }
        Ok(self.push(Op::SliceCols { start, end }, vec![a], (r, end - start)))
    }

    pub fn pad_cols(&mut self, a: NodeId, start: usize, total: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if start + c > total {
            return Err(Error::Shape(format!("padding {c} columns at {start} into {total}")));
        }
        if c == total {
            return Ok(a);
        }
        Ok(self.push(Op::PadCols { start, total }, vec![a], (r, total)))
    }

    pub fn mean_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::MeanAll, vec![a], (1, 1)))
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::SumAll, vec![a], (1, 1)))
    }

    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let (_, c) = self.check(a)?;
        Ok(self.push(Op::SumRows, vec![a], (1, c)))
    }

    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, _) = self.check(a)?;
        Ok(self.push(Op::SumCols, vec![a], (r, 1)))
    }

    pub fn broadcast_to(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        if broadcast_dim(r, rows) != Some(rows) || broadcast_dim(c, cols) != Some(cols) {
            return Err(Error::Shape(format!("cannot broadcast {r}x{c} to {rows}x{cols}")));
        }
        if (r, c) == (rows, cols) {
            return Ok(a);
        }
        Ok(self.push(Op::BroadcastTo { rows, cols }, vec![a], (rows, cols)))
    }

    /// Reduces `a` by summation to `shape`, the inverse of broadcasting.
    pub fn sum_to(&mut self, a: NodeId, shape: (usize, usize)) -> Result<NodeId> {
        let (r, c) = self.check(a)?;
        let mut out = a;
        if shape.0 == 1 && r != 1 {
            out = self.sum_rows(out)?;
        }
        if shape.1 == 1 && c != 1 {
            out = self.sum_cols(out)?;
        }
        if self.shape(out) != shape {
            return Err(Error::Shape(format!("cannot reduce {r}x{c} to {}x{}", shape.0, shape.1)));
        }
        Ok(out)
    }

    /// `x · w + b` with `b` a `(1, n)` row bias.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xw = self.matmul(x, w)?;
        self.add(xw, b)
    }

    /// Feature-crossing layer over row batches: `x0 ⊙ (xl · w) + b + xl`
    /// with `w` of shape `(d, 1)` and `b` of shape `(1, d)`.
    pub fn cross_layer(&mut self, x0: NodeId, xl: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let d = self.check(x0)?.1;
        if self.check(xl)?.1 != d || self.check(w)? != (d, 1) || self.check(b)? != (1, d) {
            return Err(Error::Shape(format!("cross layer over width {d} got mismatched operands")));
        }
        let proj = self.matmul(xl, w)?;
        let crossed = self.mul(x0, proj)?;
        let biased = self.add(crossed, b)?;
        self.add(biased, xl)
    }
}
