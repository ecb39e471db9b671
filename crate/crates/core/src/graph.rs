//! Reverse-mode differentiable computation graphs.
//!
//! A [`Graph`] is built once and then evaluated any number of times with
//! different [`Bindings`]. Leaves are named parameters (trainable), named
//! inputs (non-trainable), or constants baked into the graph. Shapes are not
//! fixed at build time; every primitive checks its operands when evaluated,
//! so the same graph serves batches with different row counts.
//!
//! The primitive set is closed: matrix product, add (with bias-row
//! broadcasting as the only broadcast), multiply, exp, tanh, log,
//! concatenate and slice along the last axis, sum, scalar multiply and
//! negate.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tensor::{self, gemm, Tensor};
use crate::{Error, Result};

/// Handle to a node of one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Param(String),
    Input(String),
    Const(Tensor),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Exp(NodeId),
    Tanh(NodeId),
    Log(NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize, usize),
    Sum(NodeId),
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::Input(_) => "input",
            Op::Const(_) => "const",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Exp(_) => "exp",
            Op::Tanh(_) => "tanh",
            Op::Log(_) => "log",
            Op::Neg(_) => "neg",
            Op::Scale(..) => "scale",
            Op::Concat(_) => "concat",
            Op::Slice(..) => "slice",
            Op::Sum(_) => "sum",
        }
    }

    fn operands(&self) -> Vec<NodeId> {
        match self {
            Op::Param(_) | Op::Input(_) | Op::Const(_) => Vec::new(),
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Exp(a) | Op::Tanh(a) | Op::Log(a) | Op::Neg(a) | Op::Scale(a, _) => vec![*a],
            Op::Slice(a, ..) | Op::Sum(a) => vec![*a],
            Op::Concat(parts) => parts.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    label: String,
    requires_grad: bool,
}

/// An immutable-after-construction computation record.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    names: BTreeMap<String, NodeId>,
    params: BTreeMap<String, NodeId>,
    inputs: BTreeMap<String, NodeId>,
    scope: String,
}

/// Leaf values by name, borrowed for the duration of one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Bindings<'a> {
    map: BTreeMap<String, &'a Tensor>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: &'a Tensor) -> &mut Self {
        self.map.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&'a Tensor> {
        self.map.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// All node values of one forward pass.
#[derive(Debug)]
pub struct Evaluation<'a> {
    values: Vec<Cow<'a, Tensor>>,
    names: &'a BTreeMap<String, NodeId>,
}

impl<'a> Evaluation<'a> {
    pub fn value(&self, node: NodeId) -> &Tensor {
        &self.values[node.0]
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.get(name).map(|id| self.value(*id))
    }

    /// Every named node's value.
    pub fn named(&self) -> BTreeMap<String, Tensor> {
        self.names.iter().map(|(k, id)| (k.clone(), self.value(*id).clone())).collect()
    }
}

/// Gradients of a scalar seed with respect to every parameter leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub value: f64,
    pub grads: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.grads.get(name)
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

    /// Prefix attached to the labels of nodes created from now on.
    pub fn set_scope(&mut self, scope: impl Into<String>) {
        self.scope = scope.into();
    }

    pub fn parameter_names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.keys().map(String::as_str)
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    fn push(&mut self, op: Op) -> NodeId {
        let operands = op.operands();
        for o in &operands {
            assert!(o.0 < self.nodes.len(), "operand {o:?} does not belong to this graph");
        }
        let requires_grad = match &op {
            Op::Param(_) => true,
            _ => operands.iter().any(|o| self.nodes[o.0].requires_grad),
        };
        let id = NodeId(self.nodes.len());
        let label = match &op {
            Op::Param(n) | Op::Input(n) => n.clone(),
            _ if self.scope.is_empty() => format!("#{} {}", id.0, op.kind()),
            _ => format!("{}/#{} {}", self.scope, id.0, op.kind()),
        };
        self.nodes.push(Node { op, label, requires_grad });
        id
    }

    /// A trainable leaf.
    pub fn param(&mut self, name: impl Into<String>) -> Result<NodeId> {
        let name = name.into();
        if self.params.contains_key(&name) || self.inputs.contains_key(&name) {
            return Err(Error::DuplicateParam(name));
        }
        let id = self.push(Op::Param(name.clone()));
        self.params.insert(name, id);
        Ok(id)
    }

    /// A non-trainable leaf supplied through the bindings.
    pub fn input(&mut self, name: impl Into<String>) -> Result<NodeId> {
        let name = name.into();
        if self.params.contains_key(&name) || self.inputs.contains_key(&name) {
            return Err(Error::DuplicateParam(name));
        }
        let id = self.push(Op::Input(name.clone()));
        self.inputs.insert(name, id);
        Ok(id)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Const(value))
    }

    /// Registers `node` under `name` so that [`Evaluation::get`] can find it.
    pub fn name(&mut self, node: NodeId, name: impl Into<String>) {
        let name = name.into();
        self.nodes[node.0].label = name.clone();
        self.names.insert(name, node);
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Exp(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Log(a))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Neg(a))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(a, factor))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        self.push(Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: NodeId, start: usize, end: usize) -> NodeId {
        self.push(Op::Slice(a, start, end))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sum(a))
    }

    fn shape_err(&self, id: usize, detail: String) -> Error {
        Error::Shape { node: self.nodes[id].label.clone(), detail }
    }

    /// Forward pass over every node. Pure: bindings are only read.
    pub fn evaluate<'a>(&'a self, bindings: &Bindings<'a>) -> Result<Evaluation<'a>> {
        let mut values: Vec<Cow<'a, Tensor>> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let value: Cow<'a, Tensor> = match &node.op {
                Op::Param(name) | Op::Input(name) => {
                    let t = bindings.get(name).ok_or_else(|| Error::MissingBinding(name.clone()))?;
                    if !t.is_finite() {
                        return Err(Error::NonFinite(format!("binding `{name}`")));
                    }
                    Cow::Borrowed(t)
                }
                Op::Const(t) => Cow::Borrowed(t),
                op => {
                    let out = self.apply(i, op, &values)?;
                    if !out.is_finite() {
                        return Err(Error::Overflow { node: node.label.clone() });
                    }
                    Cow::Owned(out)
                }
            };
            values.push(value);
        }
        Ok(Evaluation { values, names: &self.names })
    }

    fn apply(&self, i: usize, op: &Op, values: &[Cow<'_, Tensor>]) -> Result<Tensor> {
        let v = |id: &NodeId| -> &Tensor { &values[id.0] };
        let wrap = |r: core::result::Result<Tensor, String>| r.map_err(|d| self.shape_err(i, d));
        Ok(match op {
            Op::MatMul(a, b) => wrap(tensor::matmul(v(a), v(b)))?,
            Op::Add(a, b) => wrap(tensor::add(v(a), v(b)))?,
            Op::Mul(a, b) => wrap(tensor::zip_map(v(a), v(b), |x, y| x * y))?,
            Op::Exp(a) => tensor::map(v(a), math::exp),
            Op::Tanh(a) => tensor::map(v(a), math::tanh),
            Op::Log(a) => {
                if v(a).data().iter().any(|&x| x <= 0.0) {
                    return Err(Error::Contract(format!(
                        "log of a non-positive value at node `{}`",
                        self.nodes[i].label
                    )));
                }
                tensor::map(v(a), math::ln)
            }
            Op::Neg(a) => tensor::map(v(a), |x| -x),
            Op::Scale(a, s) => {
                let s = *s;
                tensor::map(v(a), move |x| s * x)
            }
            Op::Concat(parts) => {
                let refs: Vec<&Tensor> = parts.iter().map(v).collect();
                wrap(tensor::concat_last(&refs))?
            }
            Op::Slice(a, s, e) => wrap(tensor::slice_last(v(a), *s, *e))?,
            Op::Sum(a) => {
                // Row-major sequential accumulation.
                let s = v(a).data().iter().fold(0.0, |acc, x| acc + x);
                Tensor::from_raw(Vec::new(), vec![s])
            }
            Op::Param(_) | Op::Input(_) | Op::Const(_) => unreachable!("leaves handled by evaluate"),
        })
    }

    /// Evaluates the graph and returns d(seed)/d(p) for every parameter `p`.
    pub fn backward(&self, bindings: &Bindings<'_>, seed: NodeId) -> Result<Gradients> {
        let eval = self.evaluate(bindings)?;
        self.backward_from(&eval, seed)
    }

    /// Reverse accumulation over an existing forward pass.
    pub fn backward_from(&self, eval: &Evaluation<'_>, seed: NodeId) -> Result<Gradients> {
        let seed_value = eval.value(seed);
        let value = seed_value.item().ok_or_else(|| {
            Error::Contract(format!(
                "backward seed `{}` is not scalar (shape {:?})",
                self.nodes[seed.0].label,
                seed_value.shape()
            ))
        })?;
        let mut grads: Vec<Option<Tensor>> = vec![None; seed.0 + 1];
        grads[seed.0] = Some(Tensor::from_raw(seed_value.shape().to_vec(), vec![1.0]));

        for i in (0..=seed.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(dout) = grads[i].take() else { continue };
            if let Op::Param(_) = node.op {
                grads[i] = Some(dout);
                continue;
            }
            self.propagate(i, &node.op, &dout, eval, &mut grads);
        }

        let mut out = BTreeMap::new();
        for (name, id) in &self.params {
            let g = grads.get_mut(id.0).and_then(Option::take);
            let g = g.unwrap_or_else(|| Tensor::zeros(eval.value(*id).shape()));
            out.insert(name.clone(), g);
        }
        Ok(Gradients { value, grads: out })
    }

    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn propagate(&self, i: usize, op: &Op, dout: &Tensor, eval: &Evaluation<'_>, grads: &mut [Option<Tensor>]) {
        let val = |id: NodeId| eval.value(id);
        match op {
            Op::MatMul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let (m, k) = av.dims2().expect("matmul lhs is a matrix");
                let n = if bv.shape().len() == 2 { bv.shape()[1] } else { 1 };
                if self.wants(*a) {
                    // dA = dC * B^T
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, dout.data(), false, bv.data(), true, &mut da, false);
                    accumulate(grads, *a, Tensor::from_raw(av.shape().to_vec(), da));
                }
                if self.wants(*b) {
                    // dB = A^T * dC
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, av.data(), true, dout.data(), false, &mut db, false);
                    accumulate(grads, *b, Tensor::from_raw(bv.shape().to_vec(), db));
                }
            }
            Op::Add(a, b) => {
                if self.wants(*a) {
                    accumulate(grads, *a, dout.clone());
                }
                if self.wants(*b) {
                    let (av, bv) = (val(*a), val(*b));
                    if av.shape() == bv.shape() {
                        accumulate(grads, *b, dout.clone());
                    } else {
                        let n = bv.len();
                        let mut db = vec![0.0; n];
                        for row in dout.data().chunks_exact(n) {
                            for (acc, x) in db.iter_mut().zip(row) {
                                *acc += x;
                            }
                        }
                        accumulate(grads, *b, Tensor::from_raw(bv.shape().to_vec(), db));
                    }
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    let g = tensor::zip_map(dout, val(*b), |d, y| d * y).expect("shapes checked");
                    accumulate(grads, *a, g);
                }
                if self.wants(*b) {
                    let g = tensor::zip_map(dout, val(*a), |d, x| d * x).expect("shapes checked");
                    accumulate(grads, *b, g);
                }
            }
            Op::Exp(a) => {
                let g = tensor::zip_map(dout, &eval.values[i], |d, y| d * y).expect("same shape");
                accumulate(grads, *a, g);
            }
            Op::Tanh(a) => {
                let g = tensor::zip_map(dout, &eval.values[i], |d, y| d * (1.0 - y * y)).expect("same shape");
                accumulate(grads, *a, g);
            }
            Op::Log(a) => {
                let g = tensor::zip_map(dout, val(*a), |d, x| d / x).expect("same shape");
                accumulate(grads, *a, g);
            }
            Op::Neg(a) => accumulate(grads, *a, tensor::map(dout, |d| -d)),
            Op::Scale(a, s) => {
                let s = *s;
                accumulate(grads, *a, tensor::map(dout, move |d| s * d));
            }
            Op::Concat(parts) => {
                let mut start = 0;
                for p in parts {
                    let w = val(*p).last_dim();
                    if self.wants(*p) {
                        let g = tensor::slice_last(dout, start, start + w).expect("in range");
                        accumulate(grads, *p, g);
                    }
                    start += w;
                }
            }
            Op::Slice(a, s, e) => {
                let av = val(*a);
                let width = av.last_dim();
                let sw = e - s;
                let mut g = vec![0.0; av.len()];
                for (r, row) in dout.data().chunks_exact(sw).enumerate() {
                    g[r * width + s..r * width + e].copy_from_slice(row);
                }
                accumulate(grads, *a, Tensor::from_raw(av.shape().to_vec(), g));
            }
            Op::Sum(a) => {
                let d = dout.data()[0];
                let av = val(*a);
                accumulate(grads, *a, Tensor::from_raw(av.shape().to_vec(), vec![d; av.len()]));
            }
            Op::Param(_) | Op::Input(_) | Op::Const(_) => {}
        }
    }

    /// Worst relative error between [`backward`](Self::backward) and central
    /// differences over every parameter coordinate. The relative error
    /// denominator is `max(|analytic|, |numeric|, 1e-12)`.
    pub fn finite_diff_check(&self, bindings: &Bindings<'_>, seed: NodeId, eps: f64) -> Result<f64> {
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
        }
        let analytic = self.backward(bindings, seed)?;
        let mut worst: f64 = 0.0;
        for name in self.params.keys() {
            let base = bindings.get(name).ok_or_else(|| Error::MissingBinding(name.clone()))?;
            let grad = &analytic.grads[name];
            for c in 0..base.len() {
                let mut plus = base.clone();
                plus.data_mut()[c] += eps;
                let mut minus = base.clone();
                minus.data_mut()[c] -= eps;
                // Divide by the step actually taken after rounding.
                let step = plus.data()[c] - minus.data()[c];
                let fp = self.seed_value(bindings, name, &plus, seed)?;
                let fm = self.seed_value(bindings, name, &minus, seed)?;
                let numeric = (fp - fm) / step;
                let a = grad.data()[c];
                let denom = a.abs().max(numeric.abs()).max(1e-12);
                worst = worst.max((a - numeric).abs() / denom);
            }
        }
        Ok(worst)
    }

    fn seed_value(&self, bindings: &Bindings<'_>, name: &str, value: &Tensor, seed: NodeId) -> Result<f64> {
        let mut b = bindings.clone();
        b.insert(name.to_string(), value);
        let eval = self.evaluate(&b)?;
        eval.value(seed).item().ok_or_else(|| Error::Contract("finite-difference seed is not scalar".into()))
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (a, b) in existing.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn exp_of_zero() {
        let mut g = Graph::new();
        let x = g.input("x").unwrap();
        let y = g.exp(x);
        g.name(y, "y");
        let xv = t(&[1], &[0.0]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        let ev = g.evaluate(&b).unwrap();
        assert_eq!(ev.get("y").unwrap().data(), &[1.0]);
    }

    #[test]
    fn identity_affine() {
        let mut g = Graph::new();
        let w = g.input("W").unwrap();
        let x = g.input("x").unwrap();
        let bias = g.input("b").unwrap();
        let wx = g.matmul(w, x);
        let y = g.add(wx, bias);
        g.name(y, "y");
        let (wv, xv, bv) = (t(&[2, 2], &[1., 0., 0., 1.]), t(&[2], &[3., 4.]), t(&[2], &[0., 0.]));
        let mut b = Bindings::new();
        b.insert("W", &wv).insert("x", &xv).insert("b", &bv);
        assert_eq!(g.evaluate(&b).unwrap().get("y").unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn sum_tanh_odd() {
        let mut g = Graph::new();
        let x = g.input("x").unwrap();
        let th = g.tanh(x);
        let y = g.sum(th);
        let xv = t(&[2], &[0.5, -0.5]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        assert_eq!(g.evaluate(&b).unwrap().value(y).item(), Some(0.0));
    }

    #[test]
    fn square_derivative() {
        let mut g = Graph::new();
        let x = g.param("x").unwrap();
        let xx = g.mul(x, x);
        let y = g.sum(xx);
        let xv = t(&[], &[3.0]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        let gr = g.backward(&b, y).unwrap();
        assert_eq!(gr.value, 9.0);
        assert_eq!(gr.get("x").unwrap().data(), &[6.0]);
    }

    #[test]
    fn sum_exp_gradient() {
        let mut g = Graph::new();
        let x = g.param("x").unwrap();
        let ex = g.exp(x);
        let y = g.sum(ex);
        let xv = t(&[2], &[0.0, 0.0]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        assert_eq!(g.backward(&b, y).unwrap().get("x").unwrap().data(), &[1.0, 1.0]);
    }

    #[test]
    fn linear_fd_is_exact() {
        let mut g = Graph::new();
        let x = g.param("x").unwrap();
        let y2 = g.scale(x, 2.0);
        let y = g.sum(y2);
        for xv in [-3.7, 0.0, 1.25, 1e3] {
            let xt = t(&[], &[xv]);
            let mut b = Bindings::new();
            b.insert("x", &xt);
            assert!(g.finite_diff_check(&b, y, 1e-6).unwrap() < 1e-10);
        }
    }

    #[test]
    fn exp_fd_at_one() {
        let mut g = Graph::new();
        let x = g.param("x").unwrap();
        let ex = g.exp(x);
        let y = g.sum(ex);
        let xt = t(&[], &[1.0]);
        let mut b = Bindings::new();
        b.insert("x", &xt);
        let grad = g.backward(&b, y).unwrap();
        assert!((grad.get("x").unwrap().data()[0] - core::f64::consts::E).abs() < 1e-15);
        assert!(g.finite_diff_check(&b, y, 1e-6).unwrap() < 1e-8);
    }

    #[test]
    fn errors_name_the_node() {
        let mut g = Graph::new();
        g.set_scope("layer1");
        let a = g.input("a").unwrap();
        let b = g.input("b").unwrap();
        let c = g.matmul(a, b);
        let (av, bv) = (t(&[2, 3], &[0.; 6]), t(&[2, 3], &[0.; 6]));
        let mut bind = Bindings::new();
        bind.insert("a", &av).insert("b", &bv);
        match g.evaluate(&bind) {
            Err(Error::Shape { node, .. }) => assert!(node.starts_with("layer1/#2 matmul"), "{node}"),
            other => panic!("{other:?}"),
        }
        let _ = c;

        let mut g = Graph::new();
        let x = g.input("x").unwrap();
        let y = g.exp(x);
        g.name(y, "blowup");
        let xv = t(&[1], &[1000.0]);
        let mut bind = Bindings::new();
        bind.insert("x", &xv);
        assert_eq!(g.evaluate(&bind).unwrap_err(), Error::Overflow { node: "blowup".into() });
    }

    #[test]
    fn non_scalar_seed_rejected() {
        let mut g = Graph::new();
        let x = g.param("x").unwrap();
        let y = g.exp(x);
        let xv = t(&[2], &[0.0, 1.0]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        assert!(matches!(g.backward(&b, y), Err(Error::Contract(_))));
    }

    #[test]
    fn duplicate_and_missing_leaves() {
        let mut g = Graph::new();
        g.param("p").unwrap();
        assert_eq!(g.param("p"), Err(Error::DuplicateParam("p".into())));
        assert!(g.input("p").is_err());
        let b = Bindings::new();
        assert_eq!(g.evaluate(&b).unwrap_err(), Error::MissingBinding("p".into()));
    }

    #[test]
    fn log_requires_positive() {
        let mut g = Graph::new();
        let x = g.input("x").unwrap();
        g.log(x);
        let xv = t(&[2], &[1.0, 0.0]);
        let mut b = Bindings::new();
        b.insert("x", &xv);
        assert!(matches!(g.evaluate(&b), Err(Error::Contract(_))));
    }
}
