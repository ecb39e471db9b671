use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};

use super::{lr_at_epoch, AdamState, BatchItem, JointObjective, TrainBatch, TrainConfig};
use crate::cloud::PointCloud;
use crate::flow::FlowModel;
use crate::mds::DescriptorSet;
use crate::rng::{self, Rng};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Training clouds aligned row by row with their descriptors.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub clouds: &'a [PointCloud],
    pub descriptors: &'a DescriptorSet,
}

impl<'a> TrainData<'a> {
    pub fn new(clouds: &'a [PointCloud], descriptors: &'a DescriptorSet) -> Result<Self> {
        if clouds.len() < 2 {
            return Err(Error::InvalidParam("training needs at least two clouds".into()));
        }
        if clouds.len() != descriptors.n() {
            return Err(Error::Dimension { expected: descriptors.n(), got: clouds.len() });
        }
        for (c, id) in clouds.iter().zip(&descriptors.ids) {
            if c.id() != id {
                return Err(Error::Contract(format!("cloud `{}` misaligned with descriptor `{id}`", c.id())));
            }
        }
        Ok(Self { clouds, descriptors })
    }

    fn descriptor(&self, i: usize) -> Tensor {
        let row = self.descriptors.row(i);
        Tensor::from_raw(alloc::vec![1, row.len()], row.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    /// 1-based epoch number.
    pub epoch: usize,
    pub lr: f64,
    /// Mean per-point NLL over the epoch's batches.
    pub nll: f64,
    pub steps: usize,
}

/// Owns both flows and the optimizer state for the duration of training.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    f: FlowModel,
    g: FlowModel,
    adam: AdamState,
    objective: JointObjective,
    rng: Rng,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, f: FlowModel, g: FlowModel) -> Result<Self> {
        cfg.validate()?;
        let objective = JointObjective::new(&f, &g, cfg.weighting)?;
        let rng = rng::seeded(rng::derive(cfg.seed, 0x0074_7261_696e));
        Ok(Self { cfg, f, g, adam: AdamState::new(), objective, rng, epochs_done: 0 })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn f(&self) -> &FlowModel {
        &self.f
    }

    pub fn g(&self) -> &FlowModel {
        &self.g
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn objective(&self) -> &JointObjective {
        &self.objective
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn into_parts(self) -> (FlowModel, FlowModel, AdamState) {
        (self.f, self.g, self.adam)
    }

    /// Shuffled batches for one epoch: cloud `n` appears `ceil(N_n / P)` times.
    pub fn epoch_batches(&mut self, data: &TrainData<'_>) -> Vec<TrainBatch> {
        let p = self.cfg.points_per_cloud;
        let mut order: Vec<usize> = Vec::new();
        for (i, c) in data.clouds.iter().enumerate() {
            order.extend(core::iter::repeat_n(i, c.len().div_ceil(p)));
        }
        order.shuffle(&mut self.rng);
        order
            .chunks(self.cfg.clouds_per_batch)
            .map(|chunk| TrainBatch { items: chunk.iter().map(|&i| self.item(data, i)).collect() })
            .collect()
    }

    fn item(&mut self, data: &TrainData<'_>, i: usize) -> BatchItem {
        let cloud = &data.clouds[i];
        let take = self.cfg.points_per_cloud.min(cloud.len());
        let idx = index::sample(&mut self.rng, cloud.len(), take).into_vec();
        BatchItem { cloud_id: String::from(cloud.id()), points: cloud.gather(&idx), descriptor: data.descriptor(i) }
    }

    /// One optimizer step on the per-point mean of the batch loss. Parameters
    /// are left untouched when the loss or a gradient is non-finite.
    pub fn step(&mut self, batch: &TrainBatch, lr: f64) -> Result<f64> {
        let mut loss = self.objective.batch_gradients(&self.f, &self.g, batch)?;
        let scale = 1.0 / loss.points as f64;
        for t in loss.grads.values_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= scale);
        }
        let mut params = self.f.tensors_mut();
        params.extend(self.g.tensors_mut());
        self.adam.step(params, &loss.grads, lr, self.cfg.adam)?;
        Ok(loss.mean_per_point())
    }

    pub fn run_epoch(&mut self, data: &TrainData<'_>) -> Result<EpochReport> {
        let lr = lr_at_epoch(self.epochs_done, &self.cfg);
        let batches = self.epoch_batches(data);
        let mut raw = 0.0;
        let mut points = 0usize;
        for batch in &batches {
            let mean = self.step(batch, lr)?;
            let n = batch.total_points();
            raw += mean * n as f64;
            points += n;
        }
        self.epochs_done += 1;
        Ok(EpochReport { epoch: self.epochs_done, lr, nll: raw / points as f64, steps: batches.len() })
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub f: FlowModel,
    pub g: FlowModel,
    pub adam: AdamState,
    pub log: Vec<EpochReport>,
}

/// Runs `cfg.epochs` epochs. `on_epoch` sees the trainer after each epoch
/// (for logging and periodic checkpoints) and may abort by returning an error.
pub fn train<E: From<Error>>(
    data: &TrainData<'_>,
    cfg: TrainConfig,
    f: FlowModel,
    g: FlowModel,
    mut on_epoch: impl FnMut(&EpochReport, &Trainer) -> core::result::Result<(), E>,
) -> core::result::Result<TrainOutcome, E> {
    let mut trainer = Trainer::new(cfg, f, g)?;
    let mut log = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let report = trainer.run_epoch(data)?;
        on_epoch(&report, &trainer)?;
        log.push(report);
    }
    let (f, g, adam) = trainer.into_parts();
    Ok(TrainOutcome { f, g, adam, log })
}

/// Mean per-point NLL over every point of every training cloud, with the
/// descriptor term weighted as in training (once per `P` points when counted
/// per cloud).
pub fn dataset_nll(f: &FlowModel, g: &FlowModel, data: &TrainData<'_>, cfg: &TrainConfig) -> Result<f64> {
    let mut total = 0.0;
    let mut points = 0usize;
    for (i, cloud) in data.clouds.iter().enumerate() {
        let n = cloud.len();
        let p = cfg.points_per_cloud.min(n);
        let weight = cfg.weighting.weight(p) * n as f64 / p as f64;
        total += super::cloud_nll(f, g, &cloud.to_tensor(), data.descriptors.row(i), weight)?;
        points += n;
    }
    Ok(total / points as f64)
}
