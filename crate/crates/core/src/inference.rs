//! Sampling, decoding, embedding reconstruction and interpolation with a
//! trained point flow. Every operation borrows the flow immutably.

use alloc::vec::Vec;

use rand::seq::index;

use crate::cloud::PointCloud;
use crate::flow::{Embedding, FlowModel, LeafKind};
use crate::graph::{Bindings, Graph, NodeId};
use crate::math;
use crate::rng::{self, Rng};
use crate::tensor::Tensor;
use crate::train::{AdamParams, AdamState};
use crate::{Error, Result};

const EMBEDDING_STREAM: u64 = 0x0065_6d62_6564;
const MAX_INIT_RETRIES: usize = 5;

/// Standard normal latent draws used by [`decode`] for `seed`, as `[n, dim]`.
pub fn latent_draws(n_points: usize, dim: usize, seed: u64) -> Tensor {
    let mut rng = rng::seeded(seed);
    Tensor::from_raw(alloc::vec![n_points, dim], rng::standard_normal(&mut rng, n_points * dim))
}

pub fn prior_embedding(dim: usize, rng: &mut Rng) -> Embedding {
    Embedding::new(rng::standard_normal(rng, dim)).expect("normal draws are finite")
}

/// Decodes `n_points` points for a given embedding: `x_i = f^{-1}(z_i, e)`.
pub fn decode(f: &FlowModel, e: &Embedding, n_points: usize, seed: u64) -> Result<PointCloud> {
    if n_points == 0 {
        return Err(Error::EmptyCloud);
    }
    if e.dim() != f.arch().cond_dim {
        return Err(Error::Dimension { expected: f.arch().cond_dim, got: e.dim() });
    }
    let z = latent_draws(n_points, f.dim(), seed);
    let x = f.inverse(&z, Some(e))?;
    PointCloud::from_tensor(alloc::format!("decoded-{seed}"), &x)
}

/// Draws `e ~ N(0, I)` and decodes a cloud from it. The points use the same
/// stream as [`decode`] with the same seed.
pub fn sample_cloud(f: &FlowModel, n_points: usize, seed: u64) -> Result<(PointCloud, Embedding)> {
    let mut erng = rng::seeded(rng::derive(seed, EMBEDDING_STREAM));
    let e = prior_embedding(f.arch().cond_dim, &mut erng);
    let mut cloud = decode(f, &e, n_points, seed)?;
    cloud.set_id(alloc::format!("sample-{seed}"));
    Ok((cloud, e))
}

/// Linear interpolation `(1 - t) e_a + t e_b`.
pub fn interpolate(e_a: &Embedding, e_b: &Embedding, t: f64) -> Result<Embedding> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParam(alloc::format!("interpolation parameter {t} outside [0, 1]")));
    }
    if e_a.dim() != e_b.dim() {
        return Err(Error::Dimension { expected: e_a.dim(), got: e_b.dim() });
    }
    let v = e_a.as_slice().iter().zip(e_b.as_slice()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    Embedding::new(v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReconInit {
    /// `e ~ N(0, I)` from the configured seed.
    Prior,
    Zero,
    Given(Embedding),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub steps: usize,
    pub lr: f64,
    pub init: ReconInit,
    /// Per-step point budget; larger clouds are resampled every step.
    pub max_points: usize,
    pub seed: u64,
    pub adam: AdamParams,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { steps: 500, lr: 1e-2, init: ReconInit::Prior, max_points: 1024, seed: 0, adam: AdamParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Best iterate seen.
    pub embedding: Embedding,
    /// Mean per-point NLL of the best iterate.
    pub nll: f64,
    /// Mean per-point NLL of every evaluated iterate, in order.
    pub iterates: Vec<f64>,
}

impl Reconstruction {
    /// Running minimum of [`iterates`](Self::iterates); nonincreasing.
    pub fn best_trace(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.iterates
            .iter()
            .map(|&v| {
                best = best.min(v);
                best
            })
            .collect()
    }
}

/// Per-cloud NLL of a frozen point flow as a function of the embedding:
/// `sum_m [-log p_Z(f(x_m; e)) - logdet_f(x_m; e)]`.
#[derive(Debug, Clone)]
pub struct EmbeddingObjective {
    graph: Graph,
    loss: NodeId,
    point_dim: usize,
}

impl EmbeddingObjective {
    pub fn new(f: &FlowModel) -> Result<Self> {
        if !f.is_conditioned() {
            return Err(Error::Contract("embedding objective needs a conditioned flow".into()));
        }
        let mut g = Graph::new();
        let x = g.input("x")?;
        let offset = g.input("offset")?;
        let e = g.param("e")?;
        let (z, ld) = f.build_forward(&mut g, x, Some(e), LeafKind::Input)?;
        let zz = g.mul(z, z);
        let s = g.sum(zz);
        let q = g.scale(s, 0.5);
        let nll = g.sub(q, ld);
        let loss = g.add(nll, offset);
        g.name(loss, "loss");
        Ok(Self { graph: g, loss, point_dim: f.dim() })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn loss_node(&self) -> NodeId {
        self.loss
    }

    pub fn offset(&self, points: usize) -> Result<Tensor> {
        Tensor::scalar(points as f64 * 0.5 * self.point_dim as f64 * math::LN_2PI)
    }

    pub fn bindings<'a>(&self, f: &'a FlowModel, x: &'a Tensor, e: &'a Tensor, offset: &'a Tensor) -> Bindings<'a> {
        let mut b = Bindings::new();
        f.bind(&mut b);
        b.insert("x", x).insert("e", e).insert("offset", offset);
        b
    }

    /// Raw NLL and its gradient with respect to `e` (`[1, dim]`).
    pub fn value_and_grad(&self, f: &FlowModel, x: &Tensor, e: &Tensor) -> Result<(f64, Tensor)> {
        let offset = self.offset(x.shape()[0])?;
        let b = self.bindings(f, x, e, &offset);
        let mut g = self.graph.backward(&b, self.loss)?;
        Ok((g.value, g.grads.remove("e").expect("e is the only parameter")))
    }
}

/// Finds the embedding that maximizes the likelihood of `cloud` under the
/// frozen flow `f`, by Adam on the mean per-point NLL.
pub fn reconstruct_embedding(f: &FlowModel, cloud: &PointCloud, cfg: &ReconstructionConfig) -> Result<Reconstruction> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cfg.steps == 0 || cfg.lr.is_nan() || cfg.lr <= 0.0 || cfg.max_points == 0 {
        return Err(Error::InvalidParam("reconstruction needs steps >= 1, lr > 0, max_points >= 1".into()));
    }
    let objective = EmbeddingObjective::new(f)?;
    let dim = f.arch().cond_dim;
    let mut rng = rng::seeded(cfg.seed);
    let full = cloud.to_tensor();
    let subsample = cloud.len() > cfg.max_points;
    let batch = |rng: &mut Rng| -> Tensor {
        if subsample {
            let idx = index::sample(rng, cloud.len(), cfg.max_points).into_vec();
            cloud.gather(&idx)
        } else {
            full.clone()
        }
    };

    let mut e = match &cfg.init {
        ReconInit::Prior => prior_embedding(dim, &mut rng),
        ReconInit::Zero => Embedding::zeros(dim),
        ReconInit::Given(e) => {
            if e.dim() != dim {
                return Err(Error::Dimension { expected: dim, got: e.dim() });
            }
            e.clone()
        }
    }
    .to_row();

    let mut x = batch(&mut rng);
    let mut first = objective.value_and_grad(f, &x, &e);
    let mut retries = 0;
    while !matches!(&first, Ok((v, g)) if v.is_finite() && g.is_finite()) {
        if retries == MAX_INIT_RETRIES {
            return Err(Error::NonFiniteLoss { cloud: cloud.id().into() });
        }
        retries += 1;
        e = prior_embedding(dim, &mut rng).to_row();
        first = objective.value_and_grad(f, &x, &e);
    }

    let mut adam = AdamState::new();
    let mut iterates = Vec::with_capacity(cfg.steps + 1);
    let mut best: Option<(f64, Tensor)> = None;
    let mut current = first;
    for step in 0..=cfg.steps {
        let (raw, mut grad) = match current {
            Ok((v, g)) if v.is_finite() && g.is_finite() => (v, g),
            _ => break,
        };
        let n = x.shape()[0] as f64;
        let nll = raw / n;
        iterates.push(nll);
        if best.as_ref().is_none_or(|(b, _)| nll < *b) {
            best = Some((nll, e.clone()));
        }
        if step == cfg.steps {
            break;
        }
        grad.data_mut().iter_mut().for_each(|v| *v /= n);
        let mut grads = alloc::collections::BTreeMap::new();
        grads.insert(alloc::string::String::from("e"), grad);
        adam.step(alloc::vec![("e".into(), &mut e)], &grads, cfg.lr, cfg.adam)?;
        if subsample {
            x = batch(&mut rng);
        }
        current = objective.value_and_grad(f, &x, &e);
    }
    let (nll, e) = best.expect("initial iterate is finite");
    Ok(Reconstruction { embedding: Embedding::new(e.into_data())?, nll, iterates })
}
