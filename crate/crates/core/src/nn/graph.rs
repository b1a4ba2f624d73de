//! Tape-based reverse-mode differentiation over small dense tensors.
//!
//! Every operation appends a node to the [`Graph`], so node order is a
//! topological order and [`Graph::backward`] is a single reverse sweep.
//! Gradients accumulate: a second `backward` without [`Graph::zero_grad`]
//! adds the same gradients again.

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value(usize);

impl Value {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatVec(Value, Value),
    Add(Value, Value),
    AddN(Vec<Value>),
    Mul(Value, Value),
    Sigmoid(Value),
    Tanh(Value),
    OneMinus(Value),
    Concat(Vec<Value>),
    Row(Value, usize),
    Softmax(Value),
    BlockMix { weights: Value, src: Value, block: usize },
    SoftmaxXent(Value, usize),
    Sum(Value),
    Scale(Value, f64),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::AddN(..) => "add_n",
            Op::Mul(..) => "mul",
            Op::Sigmoid(..) => "sigmoid",
            Op::Tanh(..) => "tanh",
            Op::OneMinus(..) => "one_minus",
            Op::Concat(..) => "concat",
            Op::Row(..) => "row",
            Op::Softmax(..) => "softmax",
            Op::BlockMix { .. } => "block_mix",
            Op::SoftmaxXent(..) => "softmax_xent",
            Op::Sum(..) => "sum",
            Op::Scale(..) => "scale",
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log softmax(logits)[target]` with max subtraction.
pub fn softmax_xent(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Value {
        self.nodes.push(Node { value, grad: None, op });
        Value(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Value {
        self.push(value, Op::Leaf)
    }

    pub fn data(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient, `None` if nothing reached the node yet.
    pub fn grad(&self, v: Value) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn vec_of(&self, v: Value, op: &'static str) -> Result<&[f64]> {
        let t = self.data(v);
        if !t.is_vector() {
            return Err(Error::shape(op, format!("expected a column vector, got {:?}", t.shape())));
        }
        Ok(t.data())
    }

    fn same_shape(&self, a: Value, b: Value, op: &'static str) -> Result<()> {
        let (sa, sb) = (self.data(a).shape(), self.data(b).shape());
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn map(&mut self, x: Value, f: impl Fn(f64) -> f64, op: Op) -> Value {
        let t = self.data(x);
        let data = t.data().iter().map(|&v| f(v)).collect();
        let out = Tensor::from_vec(t.rows(), t.cols(), data).expect("same shape");
        self.push(out, op)
    }

    /// `m · x` for an `r × c` matrix and a length-`c` vector.
    pub fn matvec(&mut self, m: Value, x: Value) -> Result<Value> {
        let xs = self.vec_of(x, "matvec")?;
        let mt = self.data(m);
        if mt.cols() != xs.len() {
            return Err(Error::shape("matvec", format!("{:?} times vector of {}", mt.shape(), xs.len())));
        }
        let out: Vec<f64> = (0..mt.rows()).map(|r| mt.row(r).iter().zip(xs).map(|(a, b)| a * b).sum()).collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec(m, x)))
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        self.same_shape(a, b, "add")?;
        let mut out = self.data(a).clone();
        out.add_assign(self.data(b));
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Elementwise sum of any number of same-shaped values.
    pub fn add_n(&mut self, xs: &[Value]) -> Result<Value> {
        let first = *xs.first().ok_or_else(|| Error::shape("add_n", "no inputs"))?;
        let mut out = self.data(first).clone();
        for &x in &xs[1..] {
            self.same_shape(first, x, "add_n")?;
            out.add_assign(self.data(x));
        }
        Ok(self.push(out, Op::AddN(xs.to_vec())))
    }

    /// Hadamard product.
    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        self.same_shape(a, b, "mul")?;
        let (ta, tb) = (self.data(a), self.data(b));
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::from_vec(ta.rows(), ta.cols(), data)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn sigmoid(&mut self, x: Value) -> Value {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Value) -> Value {
        self.map(x, f64::tanh, Op::Tanh(x))
    }

    /// `1 - x`
    pub fn one_minus(&mut self, x: Value) -> Value {
        self.map(x, |v| 1.0 - v, Op::OneMinus(x))
    }

    pub fn scale(&mut self, x: Value, c: f64) -> Value {
        self.map(x, |v| c * v, Op::Scale(x, c))
    }

    /// Concatenate column vectors.
    pub fn concat(&mut self, xs: &[Value]) -> Result<Value> {
        let mut out = Vec::new();
        for &x in xs {
            out.extend_from_slice(self.vec_of(x, "concat")?);
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(xs.to_vec())))
    }

    /// Row `r` of a matrix as a column vector (embedding lookup).
    pub fn row(&mut self, m: Value, r: usize) -> Result<Value> {
        let t = self.data(m);
        if r >= t.rows() {
            return Err(Error::shape("row", format!("row {r} of {:?}", t.shape())));
        }
        let out = Tensor::vector(t.row(r).to_vec());
        Ok(self.push(out, Op::Row(m, r)))
    }

    pub fn softmax(&mut self, x: Value) -> Result<Value> {
        let out = softmax(self.vec_of(x, "softmax")?);
        Ok(self.push(Tensor::vector(out), Op::Softmax(x)))
    }

    /// Weighted sum of the `k` consecutive blocks of `src`, one weight per
    /// block: `out[j] = Σ_k weights[k] · src[k·block + j]`.
    pub fn block_mix(&mut self, weights: Value, src: Value) -> Result<Value> {
        let w = self.vec_of(weights, "block_mix")?;
        let s = self.vec_of(src, "block_mix")?;
        if w.is_empty() || s.len() % w.len() != 0 {
            return Err(Error::shape("block_mix", format!("{} weights over {} values", w.len(), s.len())));
        }
        let block = s.len() / w.len();
        let mut out = vec![0.0; block];
        for (k, wk) in w.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&s[k * block..(k + 1) * block]) {
                *o += wk * v;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::BlockMix { weights, src, block }))
    }

    /// Scalar cross entropy of `softmax(logits)` against class `target`.
    pub fn softmax_xent(&mut self, logits: Value, target: usize) -> Result<Value> {
        let l = self.vec_of(logits, "softmax_xent")?;
        if target >= l.len() {
            return Err(Error::shape("softmax_xent", format!("target {target} with {} classes", l.len())));
        }
        let loss = softmax_xent(l, target);
        Ok(self.push(Tensor::scalar(loss), Op::SoftmaxXent(logits, target)))
    }

    /// Sum of all entries as a scalar.
    pub fn sum(&mut self, x: Value) -> Value {
        let s = self.data(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Back-propagate from the scalar `loss`, adding into every reachable
    /// node's gradient.
    pub fn backward(&mut self, loss: Value) -> Result<()> {
        if self.data(loss).len() != 1 {
            return Err(Error::shape("backward", format!("loss has shape {:?}", self.data(loss).shape())));
        }
        let mut local: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        local[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = local[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.value.is_finite() || !g.is_finite() {
                return Err(Error::NonFinite { node: i, op: node.op.name() });
            }
            self.propagate(i, &g, &mut local);
            let node = &mut self.nodes[i];
            match &mut node.grad {
                Some(acc) => acc.add_assign(&g),
                slot => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Tensor, local: &mut [Option<Tensor>]) {
        let nodes = &self.nodes;
        let mut acc = |v: Value, f: &mut dyn FnMut(&mut [f64])| {
            let slot = local[v.0].get_or_insert_with(|| {
                let (r, c) = nodes[v.0].value.shape();
                Tensor::zeros(r, c)
            });
            f(slot.data_mut());
        };
        let gd = g.data();
        let out = nodes[i].value.data();
        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatVec(m, x) => {
                let mt = &nodes[m.0].value;
                let xs = nodes[x.0].value.data();
                let cols = mt.cols();
                acc(*m, &mut |dm| {
                    for (r, gr) in gd.iter().enumerate() {
                        if *gr != 0.0 {
                            for (d, xv) in dm[r * cols..(r + 1) * cols].iter_mut().zip(xs) {
                                *d += gr * xv;
                            }
                        }
                    }
                });
                acc(*x, &mut |dx| {
                    for (r, gr) in gd.iter().enumerate() {
                        for (d, w) in dx.iter_mut().zip(mt.row(r)) {
                            *d += gr * w;
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    acc(*v, &mut |d| d.iter_mut().zip(gd).for_each(|(d, g)| *d += g));
                }
            }
            Op::AddN(xs) => {
                for v in xs {
                    acc(*v, &mut |d| d.iter_mut().zip(gd).for_each(|(d, g)| *d += g));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                acc(*a, &mut |d| {
                    for ((d, g), y) in d.iter_mut().zip(gd).zip(bv) {
                        *d += g * y;
                    }
                });
                acc(*b, &mut |d| {
                    for ((d, g), y) in d.iter_mut().zip(gd).zip(av) {
                        *d += g * y;
                    }
                });
            }
            Op::Sigmoid(x) => acc(*x, &mut |d| {
                for ((d, g), y) in d.iter_mut().zip(gd).zip(out) {
                    *d += g * y * (1.0 - y);
                }
            }),
            Op::Tanh(x) => acc(*x, &mut |d| {
                for ((d, g), y) in d.iter_mut().zip(gd).zip(out) {
                    *d += g * (1.0 - y * y);
                }
            }),
            Op::OneMinus(x) => acc(*x, &mut |d| d.iter_mut().zip(gd).for_each(|(d, g)| *d -= g)),
            Op::Scale(x, c) => acc(*x, &mut |d| d.iter_mut().zip(gd).for_each(|(d, g)| *d += c * g)),
            Op::Concat(xs) => {
                let mut off = 0;
                for v in xs {
                    let n = nodes[v.0].value.len();
                    acc(*v, &mut |d| d.iter_mut().zip(&gd[off..off + n]).for_each(|(d, g)| *d += g));
                    off += n;
                }
            }
            Op::Row(m, r) => {
                let cols = nodes[m.0].value.cols();
                acc(*m, &mut |d| d[r * cols..(r + 1) * cols].iter_mut().zip(gd).for_each(|(d, g)| *d += g));
            }
            Op::Softmax(x) => {
                let dot: f64 = gd.iter().zip(out).map(|(g, y)| g * y).sum();
                acc(*x, &mut |d| {
                    for ((d, g), y) in d.iter_mut().zip(gd).zip(out) {
                        *d += y * (g - dot);
                    }
                });
            }
            Op::BlockMix { weights, src, block } => {
                let w = nodes[weights.0].value.data();
                let s = nodes[src.0].value.data();
                acc(*weights, &mut |d| {
                    for (k, dk) in d.iter_mut().enumerate() {
                        *dk += s[k * block..(k + 1) * block].iter().zip(gd).map(|(v, g)| v * g).sum::<f64>();
                    }
                });
                acc(*src, &mut |d| {
                    for (k, wk) in w.iter().enumerate() {
                        for (dv, g) in d[k * block..(k + 1) * block].iter_mut().zip(gd) {
                            *dv += wk * g;
                        }
                    }
                });
            }
            Op::SoftmaxXent(logits, target) => {
                let p = softmax(nodes[logits.0].value.data());
                let g0 = gd[0];
                acc(*logits, &mut |d| {
                    for (j, (d, pj)) in d.iter_mut().zip(&p).enumerate() {
                        let onehot = if j == *target { 1.0 } else { 0.0 };
                        *d += g0 * (pj - onehot);
                    }
                });
            }
            Op::Sum(x) => {
                let g0 = gd[0];
                acc(*x, &mut |d| d.iter_mut().for_each(|d| *d += g0));
            }
        }
    }
}
