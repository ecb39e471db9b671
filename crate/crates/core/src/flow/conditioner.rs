use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::graph::{Bindings, Graph, NodeId};
use crate::math;
use crate::rng::Rng;
use crate::tensor::{self, Tensor};
use crate::{Error, Result};

/// How a model's tensors enter a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Trainable: gradients are returned for these leaves.
    Param,
    /// Frozen: supplied through the bindings, no gradients.
    Input,
}

pub(crate) fn leaf(g: &mut Graph, name: String, kind: LeafKind) -> Result<NodeId> {
    match kind {
        LeafKind::Param => g.param(name),
        LeafKind::Input => g.input(name),
    }
}

/// Initialization of a conditioner's output head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadInit {
    /// Zero weights and bias: the network outputs exactly 0.
    Zero,
    /// Normal weights with the given standard deviation, zero bias.
    Random(f64),
}

/// Residual conditioner network used for the log-scale (`M`) and shift
/// (`A`) functions of a coupling block.
///
/// Layout: stage 1 is `dense(in->H), tanh, dense(H->H)` plus a linear skip
/// projection of the input; stage 2 is `dense(H->H), tanh, dense(H->H)` plus
/// the identity; a dense head maps `H` to the output width. When the network
/// is conditioned, its input is the concatenation `[x_slice, e]`; the first
/// dense layer and the skip projection are stored split into their `x` and
/// `e` row blocks, so the embedding contributes one bias row per cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionerNet {
    in_width: usize,
    cond_width: usize,
    hidden: usize,
    out_width: usize,
    s1_wx: Tensor,
    s1_we: Option<Tensor>,
    s1_b: Tensor,
    s1_w2: Tensor,
    s1_b2: Tensor,
    skip_x: Tensor,
    skip_e: Option<Tensor>,
    s2_w1: Tensor,
    s2_b1: Tensor,
    s2_w2: Tensor,
    s2_b2: Tensor,
    head_w: Tensor,
    head_b: Tensor,
}

fn normal_tensor(rng: &mut Rng, shape: &[usize], std: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let dist = Normal::new(0.0, std).expect("positive std");
    Tensor::from_raw(shape.to_vec(), (0..n).map(|_| dist.sample(rng)).collect())
}

impl ConditionerNet {
    pub fn new(
        in_width: usize,
        cond_width: usize,
        hidden: usize,
        out_width: usize,
        head: HeadInit,
        rng: &mut Rng,
    ) -> Result<Self> {
        if in_width == 0 || hidden == 0 || out_width == 0 {
            return Err(Error::InvalidParam("conditioner widths must be positive".into()));
        }
        let fan_in = (in_width + cond_width) as f64;
        let in_std = 1.0 / math::sqrt(fan_in);
        let h_std = 1.0 / math::sqrt(hidden as f64);
        let conditioned = cond_width > 0;
        let s1_wx = normal_tensor(rng, &[in_width, hidden], in_std);
        let s1_we = conditioned.then(|| normal_tensor(rng, &[cond_width, hidden], in_std));
        let s1_w2 = normal_tensor(rng, &[hidden, hidden], h_std);
        let skip_x = normal_tensor(rng, &[in_width, hidden], in_std);
        let skip_e = conditioned.then(|| normal_tensor(rng, &[cond_width, hidden], in_std));
        let s2_w1 = normal_tensor(rng, &[hidden, hidden], h_std);
        let s2_w2 = normal_tensor(rng, &[hidden, hidden], h_std);
        let head_w = match head {
            HeadInit::Zero => Tensor::zeros(&[hidden, out_width]),
            HeadInit::Random(std) => normal_tensor(rng, &[hidden, out_width], std),
        };
        Ok(Self {
            in_width,
            cond_width,
            hidden,
            out_width,
            s1_wx,
            s1_we,
            s1_b: Tensor::zeros(&[hidden]),
            s1_w2,
            s1_b2: Tensor::zeros(&[hidden]),
            skip_x,
            skip_e,
            s2_w1,
            s2_b1: Tensor::zeros(&[hidden]),
            s2_w2,
            s2_b2: Tensor::zeros(&[hidden]),
            head_w,
            head_b: Tensor::zeros(&[out_width]),
        })
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn cond_width(&self) -> usize {
        self.cond_width
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    /// Output head bias, exposed for constructing constant conditioners.
    pub fn head_bias_mut(&mut self) -> &mut Tensor {
        &mut self.head_b
    }

    /// Zeroes the head so the network outputs its head bias only.
    pub fn zero_head(&mut self) {
        self.head_w.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }

    /// Tensors with their field names in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        let mut out = Vec::with_capacity(13);
        out.push(("s1_wx", &self.s1_wx));
        if let Some(t) = &self.s1_we {
            out.push(("s1_we", t));
        }
        out.push(("s1_b", &self.s1_b));
        out.push(("s1_w2", &self.s1_w2));
        out.push(("s1_b2", &self.s1_b2));
        out.push(("skip_x", &self.skip_x));
        if let Some(t) = &self.skip_e {
            out.push(("skip_e", t));
        }
        out.push(("s2_w1", &self.s2_w1));
        out.push(("s2_b1", &self.s2_b1));
        out.push(("s2_w2", &self.s2_w2));
        out.push(("s2_b2", &self.s2_b2));
        out.push(("head_w", &self.head_w));
        out.push(("head_b", &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut out = Vec::with_capacity(13);
        out.push(("s1_wx", &mut self.s1_wx));
        if let Some(t) = &mut self.s1_we {
            out.push(("s1_we", t));
        }
        out.push(("s1_b", &mut self.s1_b));
        out.push(("s1_w2", &mut self.s1_w2));
        out.push(("s1_b2", &mut self.s1_b2));
        out.push(("skip_x", &mut self.skip_x));
        if let Some(t) = &mut self.skip_e {
            out.push(("skip_e", t));
        }
        out.push(("s2_w1", &mut self.s2_w1));
        out.push(("s2_b1", &mut self.s2_b1));
        out.push(("s2_w2", &mut self.s2_w2));
        out.push(("s2_b2", &mut self.s2_b2));
        out.push(("head_w", &mut self.head_w));
        out.push(("head_b", &mut self.head_b));
        out
    }

    fn check_input(&self, x: &Tensor, e: Option<&Tensor>) -> Result<()> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_width {
            return Err(Error::Dimension { expected: self.in_width, got: x.last_dim() });
        }
        match (e, self.cond_width) {
            (None, 0) => Ok(()),
            (Some(e), c) if c > 0 && e.shape() == [1, c] => Ok(()),
            (Some(e), c) => Err(Error::Dimension { expected: c, got: e.len() }),
            (None, c) => Err(Error::Dimension { expected: c, got: 0 }),
        }
    }

    /// Direct evaluation on a batch of rows `x: [P, in]` with an optional
    /// embedding row `e: [1, cond]`.
    pub fn eval(&self, x: &Tensor, e: Option<&Tensor>) -> Result<Tensor> {
        self.check_input(x, e)?;
        let mm = |a: &Tensor, b: &Tensor| tensor::matmul(a, b).expect("shapes checked");
        let add = |a: &Tensor, b: &Tensor| tensor::add(a, b).expect("shapes checked");

        let bias1 = match (e, &self.s1_we) {
            (Some(e), Some(we)) => add(&mm(e, we), &self.s1_b),
            _ => self.s1_b.clone(),
        };
        let pre1 = add(&mm(x, &self.s1_wx), &bias1);
        let u1 = tensor::map(&pre1, math::tanh);
        let r1 = add(&mm(&u1, &self.s1_w2), &self.s1_b2);
        let mut skip = mm(x, &self.skip_x);
        if let (Some(e), Some(se)) = (e, &self.skip_e) {
            skip = add(&skip, &mm(e, se));
        }
        let h1 = add(&r1, &skip);
        let pre2 = add(&mm(&h1, &self.s2_w1), &self.s2_b1);
        let u2 = tensor::map(&pre2, math::tanh);
        let r2 = add(&mm(&u2, &self.s2_w2), &self.s2_b2);
        let h2 = add(&h1, &r2);
        Ok(add(&mm(&h2, &self.head_w), &self.head_b))
    }

    /// Emits the same computation as [`eval`](Self::eval) into a graph.
    pub fn build(&self, g: &mut Graph, prefix: &str, x: NodeId, e: Option<NodeId>, kind: LeafKind) -> Result<NodeId> {
        if e.is_some() != (self.cond_width > 0) {
            return Err(Error::Contract(format!("conditioning mismatch for `{prefix}`")));
        }
        let mut leaves = alloc::collections::BTreeMap::new();
        for (name, _) in self.tensors() {
            leaves.insert(name, leaf(g, format!("{prefix}.{name}"), kind)?);
        }
        let p = |n: &str| leaves[n];
        g.set_scope(prefix);

        let bias1 = match e {
            Some(e) => {
                let ew = g.matmul(e, p("s1_we"));
                g.add(ew, p("s1_b"))
            }
            None => p("s1_b"),
        };
        let xw = g.matmul(x, p("s1_wx"));
        let pre1 = g.add(xw, bias1);
        let u1 = g.tanh(pre1);
        let u1w = g.matmul(u1, p("s1_w2"));
        let r1 = g.add(u1w, p("s1_b2"));
        let mut skip = g.matmul(x, p("skip_x"));
        if let Some(e) = e {
            let es = g.matmul(e, p("skip_e"));
            skip = g.add(skip, es);
        }
        let h1 = g.add(r1, skip);
        let h1w = g.matmul(h1, p("s2_w1"));
        let pre2 = g.add(h1w, p("s2_b1"));
        let u2 = g.tanh(pre2);
        let u2w = g.matmul(u2, p("s2_w2"));
        let r2 = g.add(u2w, p("s2_b2"));
        let h2 = g.add(h1, r2);
        let hw = g.matmul(h2, p("head_w"));
        let out = g.add(hw, p("head_b"));
        g.set_scope("");
        Ok(out)
    }

    pub fn bind<'a>(&'a self, prefix: &str, b: &mut Bindings<'a>) {
        for (name, t) in self.tensors() {
            b.insert(format!("{prefix}.{name}"), t);
        }
    }
}
