use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::conditioner::{HeadInit, LeafKind};
use super::coupling::{CouplingBlock, DEFAULT_SCALE_CLAMP};
use super::permutation::Permutation;
use super::Embedding;
use crate::graph::{Bindings, Graph, NodeId};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::{Error, Result, EMBEDDING_DIM, POINT_DIM};

/// Architecture of a composite flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowArch {
    pub dim: usize,
    pub split: usize,
    pub segments: usize,
    pub blocks_per_segment: usize,
    pub hidden: usize,
    /// Width of the conditioning embedding; 0 for an unconditioned flow.
    pub cond_dim: usize,
    pub permutation: Permutation,
    pub scale_clamp: f64,
}

impl FlowArch {
    /// Point-level flow: 10 segments x 3 blocks on 3D points, split 2,
    /// conditioned on a 64-dim embedding, shift-right permutations.
    pub fn point_flow(hidden: usize) -> Self {
        Self {
            dim: POINT_DIM,
            split: 2,
            segments: 10,
            blocks_per_segment: 3,
            hidden,
            cond_dim: EMBEDDING_DIM,
            permutation: Permutation::ShiftRight,
            scale_clamp: DEFAULT_SCALE_CLAMP,
        }
    }

    /// Embedding-level flow: 5 segments x 2 blocks on 64-dim vectors,
    /// split in half, swap-halves permutations.
    pub fn embedding_flow(hidden: usize) -> Self {
        Self {
            dim: EMBEDDING_DIM,
            split: EMBEDDING_DIM / 2,
            segments: 5,
            blocks_per_segment: 2,
            hidden,
            cond_dim: 0,
            permutation: Permutation::SwapHalves,
            scale_clamp: DEFAULT_SCALE_CLAMP,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.segments * self.blocks_per_segment
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks() == 0 || self.hidden == 0 {
            return Err(Error::InvalidParam("flow needs at least one block and hidden width".into()));
        }
        if self.split == 0 || self.split >= self.dim {
            return Err(Error::InvalidParam(format!("split {} out of range for D = {}", self.split, self.dim)));
        }
        if self.permutation == Permutation::ShiftRight && self.dim < 2 {
            return Err(Error::InvalidParam("shift-right needs D >= 2".into()));
        }
        self.permutation.check(self.dim)
    }
}

/// A sequence of coupling blocks, each followed by the fixed permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    arch: FlowArch,
    prefix: String,
    blocks: Vec<CouplingBlock>,
}

impl FlowModel {
    /// Fresh model; `prefix` namespaces every parameter (`f`, `g`, ...).
    pub fn new(arch: FlowArch, prefix: &str, head: HeadInit, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let blocks = (0..arch.n_blocks())
            .map(|_| CouplingBlock::new(arch.dim, arch.split, arch.cond_dim, arch.hidden, arch.scale_clamp, head, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { arch, prefix: prefix.into(), blocks })
    }

    pub fn arch(&self) -> &FlowArch {
        &self.arch
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn dim(&self) -> usize {
        self.arch.dim
    }

    pub fn is_conditioned(&self) -> bool {
        self.arch.cond_dim > 0
    }

    pub fn blocks(&self) -> &[CouplingBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [CouplingBlock] {
        &mut self.blocks
    }

    fn block_prefix(&self, k: usize) -> String {
        format!("{}.b{k:02}", self.prefix)
    }

    fn cond_row(&self, e: Option<&Embedding>) -> Result<Option<Tensor>> {
        match (e, self.arch.cond_dim) {
            (None, 0) => Ok(None),
            (Some(e), c) if c > 0 => {
                if e.dim() != c {
                    return Err(Error::Dimension { expected: c, got: e.dim() });
                }
                Ok(Some(e.to_row()))
            }
            (Some(_), _) => Err(Error::Contract("unconditioned flow given an embedding".into())),
            (None, _) => Err(Error::Contract("conditioned flow requires an embedding".into())),
        }
    }

    fn check_batch(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != 2 || x.shape()[1] != self.arch.dim {
            return Err(Error::Dimension { expected: self.arch.dim, got: x.last_dim() });
        }
        Ok(())
    }

    /// `z = flow(x)` for a batch `[P, D]`, with the total log-det per row.
    pub fn forward(&self, x: &Tensor, e: Option<&Embedding>) -> Result<(Tensor, Vec<f64>)> {
        self.check_batch(x)?;
        let e = self.cond_row(e)?;
        let rows = x.shape()[0];
        let mut logdet = alloc::vec![0.0; rows];
        let mut cur = x.clone();
        for block in &self.blocks {
            let (h, ld) = block.forward_batch(&cur, e.as_ref())?;
            for (acc, v) in logdet.iter_mut().zip(ld) {
                *acc += v;
            }
            cur = self.arch.permutation.apply_rows(&h, false);
        }
        Ok((cur, logdet))
    }

    /// `x = flow^{-1}(z)` for a batch `[P, D]`.
    pub fn inverse(&self, z: &Tensor, e: Option<&Embedding>) -> Result<Tensor> {
        self.check_batch(z)?;
        let e = self.cond_row(e)?;
        let mut cur = z.clone();
        for block in self.blocks.iter().rev() {
            let h = self.arch.permutation.apply_rows(&cur, true);
            cur = block.inverse_batch(&h, e.as_ref())?;
        }
        Ok(cur)
    }

    /// Emits the forward flow into a graph. Returns `(z, logdet)` where the
    /// log-det node sums over all rows of `x`.
    pub fn build_forward(
        &self,
        g: &mut Graph,
        x: NodeId,
        e: Option<NodeId>,
        kind: LeafKind,
    ) -> Result<(NodeId, NodeId)> {
        if e.is_some() != self.is_conditioned() {
            return Err(Error::Contract(format!("conditioning mismatch for flow `{}`", self.prefix)));
        }
        let mut cur = x;
        let mut total: Option<NodeId> = None;
        for (k, block) in self.blocks.iter().enumerate() {
            let (h, ld) = block.build(g, &self.block_prefix(k), cur, e, kind)?;
            total = Some(match total {
                None => ld,
                Some(t) => g.add(t, ld),
            });
            cur = self.arch.permutation.build(g, h, self.arch.dim);
        }
        Ok((cur, total.expect("at least one block")))
    }

    pub fn bind<'a>(&'a self, b: &mut Bindings<'a>) {
        for (k, block) in self.blocks.iter().enumerate() {
            block.bind(&self.block_prefix(k), b);
        }
    }

    /// Every parameter tensor with its full name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (k, block) in self.blocks.iter().enumerate() {
            let p = self.block_prefix(k);
            for (n, t) in block.log_scale.tensors() {
                out.push((format!("{p}.m.{n}"), t));
            }
            for (n, t) in block.shift.tensors() {
                out.push((format!("{p}.a.{n}"), t));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        let prefix = self.prefix.clone();
        for (k, block) in self.blocks.iter_mut().enumerate() {
            let p = format!("{prefix}.b{k:02}");
            for (n, t) in block.log_scale.tensors_mut() {
                out.push((format!("{p}.m.{n}"), t));
            }
            for (n, t) in block.shift.tensors_mut() {
                out.push((format!("{p}.a.{n}"), t));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Forward flow on one vector: `(z, total_logdet)`.
pub fn flow_forward(x: &[f64], e: Option<&Embedding>, model: &FlowModel) -> Result<(Vec<f64>, f64)> {
    if x.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: x.len() });
    }
    let xt = Tensor::matrix(1, x.len(), x.to_vec())?;
    let (z, ld) = model.forward(&xt, e)?;
    Ok((z.into_data(), ld[0]))
}

/// Inverse flow on one vector.
pub fn flow_inverse(z: &[f64], e: Option<&Embedding>, model: &FlowModel) -> Result<Vec<f64>> {
    if z.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: z.len() });
    }
    let zt = Tensor::matrix(1, z.len(), z.to_vec())?;
    Ok(model.inverse(&zt, e)?.into_data())
}
