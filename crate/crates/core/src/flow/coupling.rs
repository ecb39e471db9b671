use alloc::format;
use alloc::vec::Vec;

use super::conditioner::{ConditionerNet, HeadInit, LeafKind};
use super::Embedding;
use crate::graph::{Bindings, Graph, NodeId};
use crate::math;
use crate::rng::Rng;
use crate::tensor::{self, Tensor};
use crate::{Error, Result};

/// Default bound on the log-scale: `m = s * tanh(raw / s)`.
pub const DEFAULT_SCALE_CLAMP: f64 = 5.0;

/// One affine coupling transform:
/// `h[..d] = x[..d]`, `h[d..] = x[d..] * exp(m) + a`, with `m = M(x[..d], e)`
/// squashed into `(-s, s)` and `a = A(x[..d], e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    dim: usize,
    split: usize,
    scale_clamp: f64,
    pub(crate) log_scale: ConditionerNet,
    pub(crate) shift: ConditionerNet,
}

impl CouplingBlock {
    pub fn new(
        dim: usize,
        split: usize,
        cond_dim: usize,
        hidden: usize,
        scale_clamp: f64,
        head: HeadInit,
        rng: &mut Rng,
    ) -> Result<Self> {
        if split == 0 || split >= dim {
            return Err(Error::InvalidParam(format!("split {split} must satisfy 0 < d < D = {dim}")));
        }
        if !(scale_clamp > 0.0 && scale_clamp.is_finite()) {
            return Err(Error::InvalidParam(format!("scale clamp must be positive, got {scale_clamp}")));
        }
        let out = dim - split;
        Ok(Self {
            dim,
            split,
            scale_clamp,
            log_scale: ConditionerNet::new(split, cond_dim, hidden, out, head, rng)?,
            shift: ConditionerNet::new(split, cond_dim, hidden, out, head, rng)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn scale_clamp(&self) -> f64 {
        self.scale_clamp
    }

    pub fn is_conditioned(&self) -> bool {
        self.log_scale.cond_width() > 0
    }

    pub fn log_scale_net(&self) -> &ConditionerNet {
        &self.log_scale
    }

    pub fn log_scale_net_mut(&mut self) -> &mut ConditionerNet {
        &mut self.log_scale
    }

    pub fn shift_net(&self) -> &ConditionerNet {
        &self.shift
    }

    pub fn shift_net_mut(&mut self) -> &mut ConditionerNet {
        &mut self.shift
    }

    fn check(&self, x: &Tensor, e: Option<&Tensor>) -> Result<()> {
        if x.shape().len() != 2 || x.shape()[1] != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.last_dim() });
        }
        if e.is_some() != self.is_conditioned() {
            return Err(Error::Contract("embedding must be given exactly when the block is conditioned".into()));
        }
        Ok(())
    }

    fn clamp(&self, raw: &Tensor) -> Tensor {
        let s = self.scale_clamp;
        let inv = 1.0 / s;
        let scaled = tensor::map(raw, move |x| inv * x);
        let squashed = tensor::map(&scaled, math::tanh);
        tensor::map(&squashed, move |x| s * x)
    }

    /// Clamped log-scale `m` and shift `a` for the fixed slice `[P, d]`.
    pub(crate) fn conditioners(&self, xa: &Tensor, e: Option<&Tensor>) -> Result<(Tensor, Tensor)> {
        let m = self.clamp(&self.log_scale.eval(xa, e)?);
        let a = self.shift.eval(xa, e)?;
        Ok((m, a))
    }

    /// Forward transform on a batch `[P, D]`; returns `h` and one log-det per row.
    pub fn forward_batch(&self, x: &Tensor, e: Option<&Tensor>) -> Result<(Tensor, Vec<f64>)> {
        self.check(x, e)?;
        let xa = tensor::slice_last(x, 0, self.split).expect("split in range");
        let xb = tensor::slice_last(x, self.split, self.dim).expect("split in range");
        let (m, a) = self.conditioners(&xa, e)?;
        let scaled = tensor::zip_map(&xb, &tensor::map(&m, math::exp), |u, v| u * v).expect("same shape");
        let hb = tensor::add(&scaled, &a).expect("same shape");
        let h = tensor::concat_last(&[&xa, &hb]).expect("same rows");
        if !h.is_finite() {
            return Err(Error::NonFinite("coupling forward output".into()));
        }
        let logdet = m.data().chunks_exact(m.last_dim()).map(|r| r.iter().sum()).collect();
        Ok((h, logdet))
    }

    /// Inverse transform on a batch `[P, D]`.
    pub fn inverse_batch(&self, h: &Tensor, e: Option<&Tensor>) -> Result<Tensor> {
        self.check(h, e)?;
        let ha = tensor::slice_last(h, 0, self.split).expect("split in range");
        let hb = tensor::slice_last(h, self.split, self.dim).expect("split in range");
        let (m, a) = self.conditioners(&ha, e)?;
        let centered = tensor::zip_map(&hb, &a, |u, v| u - v).expect("same shape");
        let xb = tensor::zip_map(&centered, &m, |u, s| u * math::exp(-s)).expect("same shape");
        let x = tensor::concat_last(&[&ha, &xb]).expect("same rows");
        if !x.is_finite() {
            return Err(Error::NonFinite("coupling inverse output".into()));
        }
        Ok(x)
    }

    /// Graph version of [`forward_batch`](Self::forward_batch); the log-det
    /// node is the sum over all rows.
    pub fn build(
        &self,
        g: &mut Graph,
        prefix: &str,
        x: NodeId,
        e: Option<NodeId>,
        kind: LeafKind,
    ) -> Result<(NodeId, NodeId)> {
        let xa = g.slice(x, 0, self.split);
        let xb = g.slice(x, self.split, self.dim);
        let raw = self.log_scale.build(g, &format!("{prefix}.m"), xa, e, kind)?;
        let a = self.shift.build(g, &format!("{prefix}.a"), xa, e, kind)?;
        let s = self.scale_clamp;
        let scaled = g.scale(raw, 1.0 / s);
        let squashed = g.tanh(scaled);
        let m = g.scale(squashed, s);
        let em = g.exp(m);
        let xs = g.mul(xb, em);
        let hb = g.add(xs, a);
        let h = g.concat(&[xa, hb]);
        let logdet = g.sum(m);
        Ok((h, logdet))
    }

    pub fn bind<'a>(&'a self, prefix: &str, b: &mut Bindings<'a>) {
        self.log_scale.bind(&format!("{prefix}.m"), b);
        self.shift.bind(&format!("{prefix}.a"), b);
    }
}

/// Single-vector forward transform.
pub fn coupling_forward(x: &[f64], e: Option<&Embedding>, block: &CouplingBlock) -> Result<(Vec<f64>, f64)> {
    let xt = Tensor::matrix(1, x.len(), x.to_vec())?;
    let et = e.map(Embedding::to_row);
    if x.len() != block.dim() {
        return Err(Error::Dimension { expected: block.dim(), got: x.len() });
    }
    let (h, ld) = block.forward_batch(&xt, et.as_ref())?;
    Ok((h.into_data(), ld[0]))
}

/// Single-vector inverse transform.
pub fn coupling_inverse(h: &[f64], e: Option<&Embedding>, block: &CouplingBlock) -> Result<Vec<f64>> {
    if h.len() != block.dim() {
        return Err(Error::Dimension { expected: block.dim(), got: h.len() });
    }
    let ht = Tensor::matrix(1, h.len(), h.to_vec())?;
    let et = e.map(Embedding::to_row);
    Ok(block.inverse_batch(&ht, et.as_ref())?.into_data())
}
