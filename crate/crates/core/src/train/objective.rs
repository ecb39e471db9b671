use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::flow::{FlowModel, LeafKind};
use crate::graph::{Bindings, Gradients, Graph, NodeId};
use crate::math;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// How the descriptor terms `log p_E(g(w)) + logdet_g(w)` are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DescriptorWeighting {
    /// Once per cloud in a batch.
    #[default]
    PerCloud,
    /// Once per sampled point, as in the literal double sum.
    PerPoint,
}

impl DescriptorWeighting {
    pub fn tag(self) -> &'static str {
        match self {
            DescriptorWeighting::PerCloud => "per-cloud",
            DescriptorWeighting::PerPoint => "per-point",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "per-cloud" => Some(DescriptorWeighting::PerCloud),
            "per-point" => Some(DescriptorWeighting::PerPoint),
            _ => None,
        }
    }

    pub(crate) fn weight(self, points: usize) -> f64 {
        match self {
            DescriptorWeighting::PerCloud => 1.0,
            DescriptorWeighting::PerPoint => points as f64,
        }
    }
}

/// Points of one cloud paired with that cloud's descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub cloud_id: String,
    /// `[P, 3]`.
    pub points: Tensor,
    /// `[1, 64]`.
    pub descriptor: Tensor,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainBatch {
    pub items: Vec<BatchItem>,
}

impl TrainBatch {
    pub fn total_points(&self) -> usize {
        self.items.iter().map(|i| i.points.shape()[0]).sum()
    }
}

/// Raw-sum negative log-likelihood of a batch with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub raw: f64,
    pub points: usize,
    pub grads: BTreeMap<String, Tensor>,
}

impl BatchLoss {
    pub fn mean_per_point(&self) -> f64 {
        self.raw / self.points as f64
    }
}

/// Joint negative log-likelihood of one (points, descriptor) group:
///
/// `sum_m [-log p_Z(f(x_m, e)) - logdet_f(x_m, e)] + c * [-log p_E(e) - logdet_g(w)]`
/// with `e = g(w)` and `c` the descriptor weight. Gradients reach `g` through
/// both its own terms and the conditioning of `f`.
///
/// The graph is built once; a batch is the sum of independent per-cloud
/// evaluations.
#[derive(Debug, Clone)]
pub struct JointObjective {
    graph: Graph,
    loss: NodeId,
    weighting: DescriptorWeighting,
    point_dim: usize,
    embed_dim: usize,
}

impl JointObjective {
    pub fn new(f: &FlowModel, g: &FlowModel, weighting: DescriptorWeighting) -> Result<Self> {
        if f.arch().cond_dim != g.dim() || g.is_conditioned() {
            return Err(Error::Contract("f must be conditioned on the output of an unconditioned g".into()));
        }
        let mut gr = Graph::new();
        let x = gr.input("x")?;
        let w = gr.input("w")?;
        let offset = gr.input("offset")?;
        let g_weight = gr.input("g_weight")?;
        let (e, ld_g) = g.build_forward(&mut gr, w, None, LeafKind::Param)?;
        gr.name(e, "e");
        let (z, ld_f) = f.build_forward(&mut gr, x, Some(e), LeafKind::Param)?;
        gr.name(z, "z");

        let zz = gr.mul(z, z);
        let zs = gr.sum(zz);
        let zq = gr.scale(zs, 0.5);
        let nll_f = gr.sub(zq, ld_f);
        gr.name(nll_f, "nll_f");

        let ee = gr.mul(e, e);
        let es = gr.sum(ee);
        let eq = gr.scale(es, 0.5);
        let nll_g = gr.sub(eq, ld_g);
        gr.name(nll_g, "nll_g");

        let weighted = gr.mul(g_weight, nll_g);
        let partial = gr.add(nll_f, weighted);
        let loss = gr.add(partial, offset);
        gr.name(loss, "loss");
        Ok(Self { graph: gr, loss, weighting, point_dim: f.dim(), embed_dim: g.dim() })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn loss_node(&self) -> NodeId {
        self.loss
    }

    pub fn weighting(&self) -> DescriptorWeighting {
        self.weighting
    }

    /// Gaussian normalizing constants, which do not depend on parameters.
    fn offset(&self, points: usize) -> f64 {
        let c = self.weighting.weight(points);
        points as f64 * 0.5 * self.point_dim as f64 * math::LN_2PI + c * 0.5 * self.embed_dim as f64 * math::LN_2PI
    }

    /// Auxiliary scalar inputs for one item.
    pub fn scalars(&self, item: &BatchItem) -> Result<(Tensor, Tensor)> {
        let p = item.points.shape()[0];
        Ok((Tensor::scalar(self.offset(p))?, Tensor::scalar(self.weighting.weight(p))?))
    }

    /// Bindings for one item; `scalars` must come from [`Self::scalars`].
    pub fn bindings<'a>(
        &self,
        f: &'a FlowModel,
        g: &'a FlowModel,
        item: &'a BatchItem,
        scalars: &'a (Tensor, Tensor),
    ) -> Bindings<'a> {
        let mut b = Bindings::new();
        f.bind(&mut b);
        g.bind(&mut b);
        b.insert("x", &item.points)
            .insert("w", &item.descriptor)
            .insert("offset", &scalars.0)
            .insert("g_weight", &scalars.1);
        b
    }

    fn tag_error(e: Error, item: &BatchItem) -> Error {
        match e {
            Error::Overflow { .. } | Error::NonFinite(_) => Error::NonFiniteLoss { cloud: item.cloud_id.clone() },
            other => other,
        }
    }

    /// Raw loss of one item.
    pub fn item_loss(&self, f: &FlowModel, g: &FlowModel, item: &BatchItem) -> Result<f64> {
        let scalars = self.scalars(item)?;
        let b = self.bindings(f, g, item, &scalars);
        let ev = self.graph.evaluate(&b).map_err(|e| Self::tag_error(e, item))?;
        let v = ev.value(self.loss).item().expect("scalar loss");
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss { cloud: item.cloud_id.clone() });
        }
        Ok(v)
    }

    /// Raw loss of a batch: the sum over items.
    pub fn batch_loss(&self, f: &FlowModel, g: &FlowModel, batch: &TrainBatch) -> Result<f64> {
        if batch.items.is_empty() {
            return Err(Error::EmptySet("batch"));
        }
        let mut total = 0.0;
        for item in &batch.items {
            total += self.item_loss(f, g, item)?;
        }
        Ok(total)
    }

    /// Raw loss and summed parameter gradients of a batch.
    pub fn batch_gradients(&self, f: &FlowModel, g: &FlowModel, batch: &TrainBatch) -> Result<BatchLoss> {
        if batch.items.is_empty() {
            return Err(Error::EmptySet("batch"));
        }
        let mut raw = 0.0;
        let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
        for item in &batch.items {
            let scalars = self.scalars(item)?;
            let b = self.bindings(f, g, item, &scalars);
            let Gradients { value, grads: item_grads } =
                self.graph.backward(&b, self.loss).map_err(|e| Self::tag_error(e, item))?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { cloud: item.cloud_id.clone() });
            }
            raw += value;
            if grads.is_empty() {
                grads = item_grads;
            } else {
                for (k, gt) in item_grads {
                    let acc = grads.get_mut(&k).expect("same parameter set");
                    for (a, v) in acc.data_mut().iter_mut().zip(gt.data()) {
                        *a += v;
                    }
                }
            }
        }
        if grads.values().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteLoss { cloud: batch.items[0].cloud_id.clone() });
        }
        Ok(BatchLoss { raw, points: batch.total_points(), grads })
    }
}

/// Direct-route negative log-likelihood of one whole cloud, with the
/// descriptor term weighted by `descriptor_weight`.
pub fn cloud_nll(
    f: &FlowModel,
    g: &FlowModel,
    points: &Tensor,
    descriptor: &[f64],
    descriptor_weight: f64,
) -> Result<f64> {
    let w = Tensor::matrix(1, descriptor.len(), descriptor.to_vec())?;
    let (e, ld_g) = g.forward(&w, None)?;
    let e = crate::flow::Embedding::new(e.into_data())?;
    let (z, ld_f) = f.forward(points, Some(&e))?;
    let mut nll_f = 0.0;
    for (row, ld) in z.data().chunks_exact(f.dim()).zip(&ld_f) {
        nll_f -= crate::flow::std_normal_logdensity(row) + ld;
    }
    let nll_g = -(crate::flow::std_normal_logdensity(e.as_slice()) + ld_g[0]);
    Ok(nll_f + descriptor_weight * nll_g)
}
