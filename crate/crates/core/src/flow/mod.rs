//! Affine coupling flows.
//!
//! [`FlowModel`] is instantiated twice: the point flow `f` (D = 3, conditioned
//! on an [`Embedding`]) and the embedding flow `g` (D = 64, unconditioned).
//! Every block has two [`ConditionerNet`]s whose output heads start at zero,
//! so a fresh model is a pure permutation chain with zero log-det.
//!
//! The raw log-scale passes through `s * tanh(raw / s)` before it is
//! exponentiated; the log-det uses the squashed value, so it stays exact.
//! A permutation follows every block, the last one included.

mod conditioner;
mod coupling;
mod model;
mod permutation;

use alloc::vec::Vec;

pub use conditioner::{ConditionerNet, HeadInit, LeafKind};
pub use coupling::{coupling_forward, coupling_inverse, CouplingBlock, DEFAULT_SCALE_CLAMP};
pub use model::{flow_forward, flow_inverse, FlowArch, FlowModel};
pub use permutation::{apply_permutation, Permutation};

use crate::math;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Latent code of one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension { expected: crate::EMBEDDING_DIM, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// The embedding as a `[1, dim]` row.
    pub fn to_row(&self) -> Tensor {
        Tensor::from_raw(alloc::vec![1, self.0.len()], self.0.clone())
    }
}

/// Log-density of the standard normal in `v.len()` dimensions.
pub fn std_normal_logdensity(v: &[f64]) -> f64 {
    let sq: f64 = v.iter().map(|x| x * x).sum();
    -0.5 * v.len() as f64 * math::LN_2PI - 0.5 * sq
}
