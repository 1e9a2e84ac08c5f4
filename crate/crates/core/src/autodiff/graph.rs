//! Eager reverse-mode autodiff over [`Array`] values.
//!
//! Every operation computes its value when it is recorded, so the graph is
//! also the forward cache. Backward builds the adjoints as ordinary graph
//! nodes, which means a gradient can itself be differentiated: the critic's
//! input gradient feeds a penalty whose parameter gradient is taken with a
//! second `backward`.

use crate::autodiff::array::Array;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    Param,
    Input,
    Constant,
}

/// Piecewise-constant derivative masks. Their own derivative is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
enum MaskKind {
    Positive,
    Leaky(f64),
    Sign,
    Inside(f64),
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Leaf(LeafKind),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Divide(Var, f64),
    Offset(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    RepeatRows(Var, usize),
    SumRowGroups(Var, usize),
    BroadcastCols(Var, usize),
    SumCols(Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize, usize),
    PadCols(Var, usize, usize),
    Sum(Var),
    Reshape(Var, Vec<usize>),
    Relu(Var),
    LeakyRelu(Var, f64),
    Softplus(Var),
    Sigmoid(Var),
    Cos(Var),
    Sin(Var),
    Abs(Var),
    Square(Var),
    Sqrt(Var),
    Recip(Var),
    Huber(Var, f64),
    Clip(Var, f64),
    Mask(Var, MaskKind),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Divide(..) => "divide",
            Op::Offset(..) => "offset",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::RepeatRows(..) => "repeat_rows",
            Op::SumRowGroups(..) => "sum_row_groups",
            Op::BroadcastCols(..) => "broadcast_cols",
            Op::SumCols(..) => "sum_cols",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::PadCols(..) => "pad_cols",
            Op::Sum(..) => "sum",
            Op::Reshape(..) => "reshape",
            Op::Relu(..) => "relu",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Softplus(..) => "softplus",
            Op::Sigmoid(..) => "sigmoid",
            Op::Cos(..) => "cos",
            Op::Sin(..) => "sin",
            Op::Abs(..) => "abs",
            Op::Square(..) => "square",
            Op::Sqrt(..) => "sqrt",
            Op::Recip(..) => "recip",
            Op::Huber(..) => "huber",
            Op::Clip(..) => "clip",
            Op::Mask(..) => "mask",
        }
    }

    /// Ops whose derivative is a step function. Differentiating through their
    /// gradient gives zero curvature almost everywhere, which silently breaks
    /// input-gradient penalties.
    fn second_order_capable(&self) -> bool {
        !matches!(
            self,
            Op::Relu(..) | Op::Abs(..) | Op::Huber(..) | Op::Clip(..) | Op::Mask(..)
        )
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf(_) => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::MatMul(a, b) | Op::ConcatCols(a, b) => {
                vec![*a, *b]
            }
            Op::Scale(a, _)
            | Op::Divide(a, _)
            | Op::Offset(a, _)
            | Op::Transpose(a)
            | Op::RepeatRows(a, _)
            | Op::SumRowGroups(a, _)
            | Op::BroadcastCols(a, _)
            | Op::SumCols(a)
            | Op::SliceCols(a, _, _)
            | Op::PadCols(a, _, _)
            | Op::Sum(a)
            | Op::Reshape(a, _)
            | Op::Relu(a)
            | Op::LeakyRelu(a, _)
            | Op::Softplus(a)
            | Op::Sigmoid(a)
            | Op::Cos(a)
            | Op::Sin(a)
            | Op::Abs(a)
            | Op::Square(a)
            | Op::Sqrt(a)
            | Op::Recip(a)
            | Op::Huber(a, _)
            | Op::Clip(a, _)
            | Op::Mask(a, _) => vec![*a],
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Array,
    requires_grad: bool,
}

/// Gradients of a scalar root with respect to every differentiable leaf.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    entries: Vec<(Var, Array)>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Array> {
        self.entries
            .binary_search_by_key(&var, |(v, _)| *v)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Gradient for `var`, or zeros shaped like it if the root does not depend on it.
    pub fn get_or_zeros(&self, graph: &Graph, var: Var) -> Array {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Array::zeros(graph.value(var).shape()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Var, Array)> {
        self.entries.iter()
    }
}

/// A define-by-run computation graph. Single-threaded; independent graphs
/// share nothing and may live on different threads.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn huber(a: f64, delta: f64) -> f64 {
    if a.abs() <= delta {
        0.5 * a * a
    } else {
        delta * (a.abs() - 0.5 * delta)
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

    fn push(&mut self, op: Op, value: Array) -> Var {
        let requires_grad = match &op {
            Op::Leaf(kind) => matches!(kind, LeafKind::Param | LeafKind::Input),
            Op::Mask(..) => false,
            other => other
                .inputs()
                .iter()
                .any(|v| self.nodes[v.0].requires_grad),
        };
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable parameter leaf.
    pub fn param(&mut self, value: Array) -> Var {
        self.push(Op::Leaf(LeafKind::Param), value)
    }

    /// Differentiable input leaf (its gradient can be requested).
    pub fn input(&mut self, value: Array) -> Var {
        self.push(Op::Leaf(LeafKind::Input), value)
    }

    pub fn constant(&mut self, value: Array) -> Var {
        self.push(Op::Leaf(LeafKind::Constant), value)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(Array::scalar(value))
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.0].value
    }

    /// Value of `root`. Values are computed when nodes are recorded, so this is a lookup.
    pub fn forward(&self, root: Var) -> &Array {
        self.value(root)
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::Shape {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), v))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| c * x);
        self.push(Op::Scale(a, c), v)
    }

    /// Elementwise division by a constant (rounds once, unlike scaling by `1/c`).
    pub fn divide(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x / c);
        self.push(Op::Divide(a, c), v)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(Op::Offset(a, c), v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), v))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).transpose()?;
        Ok(self.push(Op::Transpose(a), v))
    }

    /// Repeat every row `k` times consecutively: `r x c -> (r*k) x c`.
    pub fn repeat_rows(&mut self, a: Var, k: usize) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.require_rank2("repeat_rows")?;
        let mut out = Vec::with_capacity(r * k * c);
        for i in 0..r {
            let row = &src.values()[i * c..(i + 1) * c];
            for _ in 0..k {
                out.extend_from_slice(row);
            }
        }
        let v = Array::matrix(r * k, c, out)?;
        Ok(self.push(Op::RepeatRows(a, k), v))
    }

    /// Sum consecutive groups of `k` rows: `(r*k) x c -> r x c`.
    pub fn sum_row_groups(&mut self, a: Var, k: usize) -> Result<Var> {
        let src = self.value(a);
        let (rk, c) = src.require_rank2("sum_row_groups")?;
        if k == 0 || rk % k != 0 {
            return Err(Error::Shape {
                op: "sum_row_groups",
                left: src.shape().to_vec(),
                right: vec![k],
            });
        }
        let r = rk / k;
        let mut out = vec![0.0; r * c];
        for i in 0..rk {
            let g = i / k;
            for j in 0..c {
                out[g * c + j] += src.values()[i * c + j];
            }
        }
        let v = Array::matrix(r, c, out)?;
        Ok(self.push(Op::SumRowGroups(a, k), v))
    }

    /// Sum over rows: `r x c -> 1 x c`.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        let r = self.value(a).require_rank2("sum_rows")?.0;
        self.sum_row_groups(a, r)
    }

    /// Broadcast a column: `r x 1 -> r x k`.
    pub fn broadcast_cols(&mut self, a: Var, k: usize) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.require_rank2("broadcast_cols")?;
        if c != 1 {
            return Err(Error::Shape {
                op: "broadcast_cols",
                left: src.shape().to_vec(),
                right: vec![r, 1],
            });
        }
        let mut out = Vec::with_capacity(r * k);
        for &x in src.values() {
            out.extend(std::iter::repeat(x).take(k));
        }
        let v = Array::matrix(r, k, out)?;
        Ok(self.push(Op::BroadcastCols(a, k), v))
    }

    /// Sum over columns: `r x c -> r x 1`.
    pub fn sum_cols(&mut self, a: Var) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.require_rank2("sum_cols")?;
        let out = (0..r)
            .map(|i| src.values()[i * c..(i + 1) * c].iter().sum())
            .collect();
        let v = Array::matrix(r, 1, out)?;
        Ok(self.push(Op::SumCols(a), v))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        let (ra, ca) = va.require_rank2("concat_cols")?;
        let (rb, cb) = vb.require_rank2("concat_cols")?;
        if ra != rb {
            return Err(Error::Shape {
                op: "concat_cols",
                left: va.shape().to_vec(),
                right: vb.shape().to_vec(),
            });
        }
        let mut out = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            out.extend_from_slice(&va.values()[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&vb.values()[i * cb..(i + 1) * cb]);
        }
        let v = Array::matrix(ra, ca + cb, out)?;
        Ok(self.push(Op::ConcatCols(a, b), v))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.require_rank2("slice_cols")?;
        if start > end || end > c {
            return Err(Error::Shape {
                op: "slice_cols",
                left: src.shape().to_vec(),
                right: vec![start, end],
            });
        }
        let w = end - start;
        let mut out = Vec::with_capacity(r * w);
        for i in 0..r {
            out.extend_from_slice(&src.values()[i * c + start..i * c + end]);
        }
        let v = Array::matrix(r, w, out)?;
        Ok(self.push(Op::SliceCols(a, start, end), v))
    }

    /// Embed `a` as columns starting at `start` of a zero matrix with `total` columns.
    fn pad_cols(&mut self, a: Var, start: usize, total: usize) -> Result<Var> {
        let src = self.value(a);
        let (r, w) = src.require_rank2("pad_cols")?;
        if start + w > total {
            return Err(Error::Shape {
                op: "pad_cols",
                left: src.shape().to_vec(),
                right: vec![start, total],
            });
        }
        let mut out = vec![0.0; r * total];
        for i in 0..r {
            out[i * total + start..i * total + start + w]
                .copy_from_slice(&src.values()[i * w..(i + 1) * w]);
        }
        let v = Array::matrix(r, total, out)?;
        Ok(self.push(Op::PadCols(a, start, total), v))
    }

    /// Sum of all elements, as a `1 x 1` scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = Array::scalar(self.value(a).sum());
        self.push(Op::Sum(a), v)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let v = Array::new(shape.clone(), self.value(a).values().to_vec())?;
        Ok(self.push(Op::Reshape(a, shape), v))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(Op::Relu(a), v)
    }

    /// Leaky ReLU. The derivative at exactly zero is taken to be `slope`.
    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(a, slope), v)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus);
        self.push(Op::Softplus(a), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), v)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::cos);
        self.push(Op::Cos(a), v)
    }

    pub fn sin(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::sin);
        self.push(Op::Sin(a), v)
    }

    /// Absolute value; subgradient at zero is zero.
    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::abs);
        self.push(Op::Abs(a), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(Op::Square(a), v)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::sqrt);
        self.push(Op::Sqrt(a), v)
    }

    pub fn recip(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| 1.0 / x);
        self.push(Op::Recip(a), v)
    }

    /// Elementwise Huber function with threshold `delta`.
    pub fn huber(&mut self, a: Var, delta: f64) -> Var {
        let v = self.value(a).map(|x| huber(x, delta));
        self.push(Op::Huber(a, delta), v)
    }

    fn clip(&mut self, a: Var, delta: f64) -> Var {
        let v = self.value(a).map(|x| x.clamp(-delta, delta));
        self.push(Op::Clip(a, delta), v)
    }

    fn mask(&mut self, a: Var, kind: MaskKind) -> Var {
        let f = move |x: f64| match kind {
            MaskKind::Positive => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            MaskKind::Leaky(s) => {
                if x > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            MaskKind::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            MaskKind::Inside(d) => {
                if x.abs() <= d {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let v = self.value(a).map(f);
        self.push(Op::Mask(a, kind), v)
    }

    /// Vector-Jacobian product of node `node` for upstream adjoint `g`,
    /// returned per input, built from graph ops so it stays differentiable.
    fn vjp(&mut self, node: Var, g: Var) -> Result<Vec<(Var, Var)>> {
        let op = self.nodes[node.0].op.clone();
        let out = match op {
            Op::Leaf(_) | Op::Mask(..) => vec![],
            Op::Add(a, b) => vec![(a, g), (b, g)],
            Op::Sub(a, b) => {
                let ng = self.neg(g);
                vec![(a, g), (b, ng)]
            }
            Op::Mul(a, b) => {
                let ga = self.mul(g, b)?;
                let gb = self.mul(g, a)?;
                vec![(a, ga), (b, gb)]
            }
            Op::Scale(a, c) => vec![(a, self.scale(g, c))],
            Op::Divide(a, c) => vec![(a, self.divide(g, c))],
            Op::Offset(a, _) => vec![(a, g)],
            Op::MatMul(a, b) => {
                let bt = self.transpose(b)?;
                let ga = self.matmul(g, bt)?;
                let at = self.transpose(a)?;
                let gb = self.matmul(at, g)?;
                vec![(a, ga), (b, gb)]
            }
            Op::Transpose(a) => vec![(a, self.transpose(g)?)],
            Op::RepeatRows(a, k) => vec![(a, self.sum_row_groups(g, k)?)],
            Op::SumRowGroups(a, k) => vec![(a, self.repeat_rows(g, k)?)],
            Op::BroadcastCols(a, _) => vec![(a, self.sum_cols(g)?)],
            Op::SumCols(a) => {
                let c = self.value(a).cols();
                vec![(a, self.broadcast_cols(g, c)?)]
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(a).cols();
                let cb = self.value(b).cols();
                let ga = self.slice_cols(g, 0, ca)?;
                let gb = self.slice_cols(g, ca, ca + cb)?;
                vec![(a, ga), (b, gb)]
            }
            Op::SliceCols(a, start, _) => {
                let total = self.value(a).cols();
                vec![(a, self.pad_cols(g, start, total)?)]
            }
            Op::PadCols(a, start, _) => {
                let w = self.value(a).cols();
                vec![(a, self.slice_cols(g, start, start + w)?)]
            }
            Op::Sum(a) => {
                let (r, c) = {
                    let v = self.value(a);
                    (v.rows(), v.cols())
                };
                let col = self.repeat_rows(g, r)?;
                let full = self.broadcast_cols(col, c)?;
                let shape = self.value(a).shape().to_vec();
                if shape.len() != 2 {
                    vec![(a, self.reshape(full, shape)?)]
                } else {
                    vec![(a, full)]
                }
            }
            Op::Reshape(a, _) => {
                let shape = self.value(a).shape().to_vec();
                vec![(a, self.reshape(g, shape)?)]
            }
            Op::Relu(a) => {
                let m = self.mask(a, MaskKind::Positive);
                vec![(a, self.mul(g, m)?)]
            }
            Op::LeakyRelu(a, s) => {
                let m = self.mask(a, MaskKind::Leaky(s));
                vec![(a, self.mul(g, m)?)]
            }
            Op::Softplus(a) => {
                let s = self.sigmoid(a);
                vec![(a, self.mul(g, s)?)]
            }
            Op::Sigmoid(a) => {
                let y = node;
                let ny = self.neg(y);
                let one_minus = self.offset(ny, 1.0);
                let d = self.mul(y, one_minus)?;
                vec![(a, self.mul(g, d)?)]
            }
            Op::Cos(a) => {
                let s = self.sin(a);
                let ns = self.neg(s);
                vec![(a, self.mul(g, ns)?)]
            }
            Op::Sin(a) => {
                let c = self.cos(a);
                vec![(a, self.mul(g, c)?)]
            }
            Op::Abs(a) => {
                let m = self.mask(a, MaskKind::Sign);
                vec![(a, self.mul(g, m)?)]
            }
            Op::Square(a) => {
                let two_a = self.scale(a, 2.0);
                vec![(a, self.mul(g, two_a)?)]
            }
            Op::Sqrt(a) => {
                let r = self.recip(node);
                let half = self.scale(r, 0.5);
                vec![(a, self.mul(g, half)?)]
            }
            Op::Recip(a) => {
                let y2 = self.square(node);
                let d = self.mul(g, y2)?;
                vec![(a, self.neg(d))]
            }
            Op::Huber(a, d) => {
                let c = self.clip(a, d);
                vec![(a, self.mul(g, c)?)]
            }
            Op::Clip(a, d) => {
                let m = self.mask(a, MaskKind::Inside(d));
                vec![(a, self.mul(g, m)?)]
            }
        };
        Ok(out)
    }

    /// Adjoint nodes for every node up to `root`. Nodes are visited once,
    /// in reverse creation order; contributions accumulate in that order.
    fn adjoints(&mut self, root: Var) -> Result<Vec<Option<Var>>> {
        if !self.value(root).is_scalar() {
            return Err(Error::Contract(format!(
                "backward requires a scalar root, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut adj: Vec<Option<Var>> = vec![None; root.0 + 1];
        let seed = Array::full(self.value(root).shape(), 1.0);
        adj[root.0] = Some(self.constant(seed));
        for i in (0..=root.0).rev() {
            let Some(g) = adj[i] else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            for (input, contrib) in self.vjp(Var(i), g)? {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                adj[input.0] = Some(match adj[input.0] {
                    Some(prev) => self.add(prev, contrib)?,
                    None => contrib,
                });
            }
        }
        Ok(adj)
    }

    /// Exact gradients of scalar `root` with respect to every param and input leaf.
    pub fn backward(&mut self, root: Var) -> Result<Gradients> {
        let adj = self.adjoints(root)?;
        let mut entries = Vec::new();
        for (i, a) in adj.iter().enumerate() {
            if let (Op::Leaf(LeafKind::Param | LeafKind::Input), Some(g)) = (&self.nodes[i].op, a) {
                entries.push((Var(i), self.value(*g).clone()));
            }
        }
        Ok(Gradients { entries })
    }

    /// Gradients of scalar `root` with respect to `wrt`, as differentiable graph nodes.
    pub fn grad(&mut self, root: Var, wrt: &[Var]) -> Result<Vec<Var>> {
        let adj = self.adjoints(root)?;
        Ok(wrt
            .iter()
            .map(|&w| match adj.get(w.0).copied().flatten() {
                Some(g) => g,
                None => {
                    let z = Array::zeros(self.value(w).shape());
                    self.constant(z)
                }
            })
            .collect())
    }

    /// `d root / d input` as a graph node that remains differentiable with
    /// respect to parameters. Fails if any op between `input` and `root` has a
    /// step-function derivative.
    pub fn input_gradient(&mut self, root: Var, input: Var) -> Result<Var> {
        if input.0 > root.0 {
            return Err(Error::Contract("input was created after the root".into()));
        }
        let n = root.0 + 1;
        let mut depends = vec![false; n];
        depends[input.0] = true;
        for i in input.0 + 1..n {
            depends[i] = self.nodes[i].op.inputs().iter().any(|v| depends[v.0]);
        }
        let mut reaches_root = vec![false; n];
        reaches_root[root.0] = true;
        for i in (0..n).rev() {
            if reaches_root[i] {
                for v in self.nodes[i].op.inputs() {
                    reaches_root[v.0] = true;
                }
            }
        }
        for i in input.0 + 1..n {
            if depends[i] && reaches_root[i] && !self.nodes[i].op.second_order_capable() {
                return Err(Error::Capability(format!(
                    "`{}` on the path from input to root has no usable second derivative",
                    self.nodes[i].op.name()
                )));
            }
        }
        Ok(self.grad(root, &[input])?[0])
    }
}
