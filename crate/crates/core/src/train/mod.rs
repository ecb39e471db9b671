//! Joint maximum-likelihood training of the point flow and the embedding flow.

mod adam;
mod objective;
mod trainer;

pub use adam::{adam_step, AdamParams, AdamState};
pub use objective::{cloud_nll, BatchItem, BatchLoss, DescriptorWeighting, JointObjective, TrainBatch};
pub use trainer::{dataset_nll, train, EpochReport, TrainData, TrainOutcome, Trainer};

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub adam: AdamParams,
    pub epochs: usize,
    pub clouds_per_batch: usize,
    pub points_per_cloud: usize,
    pub seed: u64,
    pub weighting: DescriptorWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-4,
            decay_factor: 0.8,
            decay_every: 40,
            adam: AdamParams::default(),
            epochs: 200,
            clouds_per_batch: 8,
            points_per_cloud: 128,
            seed: 0,
            weighting: DescriptorWeighting::PerCloud,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.lr0 > 0.0
            && self.decay_every > 0
            && self.clouds_per_batch > 0
            && self.points_per_cloud > 0
            && self.adam.eps > 0.0;
        if !positive {
            return Err(Error::InvalidParam("training hyperparameters must be positive".into()));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return Err(Error::InvalidParam("decay factor must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(Error::InvalidParam("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Step-decay schedule: `lr0 * decay_factor^floor(epoch / decay_every)`.
pub fn lr_at_epoch(epoch: usize, cfg: &TrainConfig) -> f64 {
    let k = (epoch / cfg.decay_every).min(i32::MAX as usize) as i32;
    cfg.lr0 * math::powi(cfg.decay_factor, k)
}
