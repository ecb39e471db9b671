//! End-to-end workflows behind the command-line subcommands.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use cif_core::chamfer::pairwise_cd_matrix;
use cif_core::cloud::PointCloud;
use cif_core::flow::{Embedding, FlowArch, FlowModel, HeadInit};
use cif_core::inference::{
    decode, interpolate as lerp, reconstruct_embedding, sample_cloud, Reconstruction, ReconstructionConfig,
};
use cif_core::mds::classical_mds;
use cif_core::metrics::{evaluate, EvalReport};
use cif_core::rng;
use cif_core::train::{train, EpochReport, TrainConfig, TrainData, Trainer};
use cif_core::EMBEDDING_DIM;

use crate::checkpoint::{Checkpoint, SeedLineage};
use crate::cloud_io::save_cloud;
use crate::dataset::{load_dir, normalize_cloud, split_dataset, NormRecord};
use crate::error::{io_at, Error, Result};
use crate::fsutil::create_dir;
use crate::report::loss_line;

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub data: PathBuf,
    pub out: PathBuf,
    /// Loss log; defaults to `<out>.log`.
    pub log: Option<PathBuf>,
    /// Directory for the normalized test split; defaults to `<out>.test`.
    pub test_out: Option<PathBuf>,
    pub seed: u64,
    pub split_ratio: f64,
    pub f_hidden: usize,
    pub g_hidden: usize,
    pub checkpoint_every: Option<usize>,
    /// `seed` is replaced by the derived training seed.
    pub config: TrainConfig,
}

impl TrainOptions {
    pub fn new(data: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            data: data.into(),
            out: out.into(),
            log: None,
            test_out: None,
            seed: 0,
            split_ratio: 0.9,
            f_hidden: 128,
            g_hidden: 128,
            checkpoint_every: None,
            config: TrainConfig::default(),
        }
    }

    pub fn log_path(&self) -> PathBuf {
        self.log.clone().unwrap_or_else(|| with_suffix(&self.out, ".log"))
    }

    pub fn test_dir(&self) -> PathBuf {
        self.test_out.clone().unwrap_or_else(|| with_suffix(&self.out, ".test"))
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Zero-headed flows, so both start as fixed permutations.
pub fn initial_models(f_hidden: usize, g_hidden: usize, seed: u64) -> Result<(FlowModel, FlowModel)> {
    let mut r = rng::seeded(seed);
    let f = FlowModel::new(FlowArch::point_flow(f_hidden), "f", HeadInit::Zero, &mut r)?;
    let g = FlowModel::new(FlowArch::embedding_flow(g_hidden), "g", HeadInit::Zero, &mut r)?;
    Ok((f, g))
}

/// Training split and everything derived from it before optimization.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
    pub normalization: Vec<NormRecord>,
    pub descriptors: cif_core::mds::DescriptorSet,
    pub seeds: SeedLineage,
}

/// Loads, normalizes and splits the data, then computes MDS descriptors of
/// the training clouds from their Chamfer distances.
pub fn prepare(data: &Path, seed: u64, split_ratio: f64) -> Result<Prepared> {
    let seeds = SeedLineage::from_run(seed);
    let raw = load_dir(data)?;
    let (clouds, normalization): (Vec<_>, Vec<_>) = raw.iter().map(normalize_cloud).unzip();
    let (train, test) = split_dataset(&clouds, split_ratio, seeds.split)?;
    let descriptors = classical_mds(&pairwise_cd_matrix(&train)?, EMBEDDING_DIM)?;
    Ok(Prepared { train, test, normalization, descriptors, seeds })
}

pub fn run_train(opts: &TrainOptions, mut progress: impl FnMut(&EpochReport)) -> Result<Checkpoint> {
    let prep = prepare(&opts.data, opts.seed, opts.split_ratio)?;
    let test_dir = opts.test_dir();
    create_dir(&test_dir)?;
    for c in &prep.test {
        save_cloud(c, test_dir.join(format!("{}.xyz", c.id())))?;
    }

    let config = TrainConfig { seed: prep.seeds.train, ..opts.config };
    let (f, g) = initial_models(opts.f_hidden, opts.g_hidden, prep.seeds.init)?;
    let data = TrainData::new(&prep.train, &prep.descriptors)?;

    let log_path = opts.log_path();
    let mut log = File::create(&log_path).map_err(io_at(&log_path))?;
    let snapshot = |t: &Trainer| Checkpoint {
        f: t.f().clone(),
        g: t.g().clone(),
        descriptors: prep.descriptors.clone(),
        config,
        normalization: prep.normalization.clone(),
        seeds: prep.seeds,
        epochs_done: t.epochs_done(),
        adam: t.adam().clone(),
    };
    let mut last = None;
    let outcome = train::<Error>(&data, config, f, g, |report, trainer| {
        writeln!(log, "{}", loss_line(report)).and_then(|_| log.flush()).map_err(io_at(&log_path))?;
        progress(report);
        let periodic = opts.checkpoint_every.is_some_and(|k| k > 0 && report.epoch % k == 0);
        if periodic || report.epoch == config.epochs {
            let ckpt = snapshot(trainer);
            ckpt.save(&opts.out)?;
            last = Some(ckpt);
        }
        Ok(())
    })?;
    match last {
        Some(ckpt) => Ok(ckpt),
        // Zero epochs: save the initial state.
        None => {
            let ckpt = Checkpoint {
                f: outcome.f,
                g: outcome.g,
                descriptors: prep.descriptors,
                config,
                normalization: prep.normalization,
                seeds: prep.seeds,
                epochs_done: 0,
                adam: outcome.adam,
            };
            ckpt.save(&opts.out)?;
            Ok(ckpt)
        }
    }
}

/// Cloud `k` is drawn with seed `derive(seed, k)`.
pub fn sample_clouds(f: &FlowModel, n_clouds: usize, n_points: usize, seed: u64) -> Result<Vec<PointCloud>> {
    (0..n_clouds)
        .map(|k| {
            let (mut c, _) = sample_cloud(f, n_points, rng::derive(seed, k as u64))?;
            c.set_id(format!("sample_{k:03}"));
            Ok(c)
        })
        .collect()
}

pub fn write_clouds(clouds: &[PointCloud], dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    clouds
        .iter()
        .map(|c| {
            let p = dir.join(format!("{}.xyz", c.id()));
            save_cloud(c, &p)?;
            Ok(p)
        })
        .collect()
}

pub enum Generated<'a> {
    Sampled { n_clouds: usize, n_points: Option<usize>, seed: u64 },
    Dir(&'a Path),
}

/// Evaluates generated clouds against every cloud in `test_dir`. Sampled
/// clouds default to the size of the first reference cloud.
pub fn run_eval(f: &FlowModel, test_dir: &Path, generated: Generated<'_>) -> Result<(EvalReport, Vec<String>)> {
    let reference = load_dir(test_dir)?;
    let gen = match generated {
        Generated::Dir(dir) => load_dir(dir)?,
        Generated::Sampled { n_clouds, n_points, seed } => {
            sample_clouds(f, n_clouds, n_points.unwrap_or(reference[0].len()), seed)?
        }
    };
    let report = evaluate(&gen, &reference)?;
    Ok((report, reference.iter().map(|c| c.id().to_string()).collect()))
}

/// Reconstruction of one raw cloud: the optimized embedding and a decoded
/// cloud mapped back to the input's frame.
pub struct Reconstructed {
    pub reconstruction: Reconstruction,
    pub decoded: PointCloud,
}

pub fn run_reconstruct(
    f: &FlowModel,
    cloud: &PointCloud,
    cfg: &ReconstructionConfig,
    n_points: usize,
    decode_seed: u64,
) -> Result<Reconstructed> {
    let (normalized, record) = normalize_cloud(cloud);
    let reconstruction = reconstruct_embedding(f, &normalized, cfg)?;
    let mut decoded = record.denormalize(&decode(f, &reconstruction.embedding, n_points, decode_seed)?);
    decoded.set_id(format!("{}_recon", cloud.id()));
    Ok(Reconstructed { reconstruction, decoded })
}

/// `k` evenly spaced interpolants between the reconstructed embeddings of
/// two clouds, decoded in the normalized frame with a shared point seed.
pub fn run_interpolate(
    f: &FlowModel,
    a: &PointCloud,
    b: &PointCloud,
    cfg: &ReconstructionConfig,
    k: usize,
    n_points: usize,
    decode_seed: u64,
) -> Result<Vec<(f64, Embedding, PointCloud)>> {
    if k == 0 {
        return Err(Error::Invalid("interpolation needs at least one step".into()));
    }
    let ea = reconstruct_embedding(f, &normalize_cloud(a).0, cfg)?.embedding;
    let eb = reconstruct_embedding(f, &normalize_cloud(b).0, cfg)?.embedding;
    (0..k)
        .map(|i| {
            let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            let e = lerp(&ea, &eb, t)?;
            let mut c = decode(f, &e, n_points, decode_seed)?;
            c.set_id(format!("interp_{i:03}"));
            Ok((t, e, c))
        })
        .collect()
}

/// Files of a directory tree with their contents, sorted by relative path.
pub fn snapshot_dir(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_at(&d))? {
            let p = entry.map_err(io_at(&d))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = fs::read(&p).map_err(io_at(&p))?;
                out.push((p.strip_prefix(dir).expect("under root").to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    Ok(out)
}
