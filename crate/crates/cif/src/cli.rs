use std::ffi::OsString;
use std::path::PathBuf;

use cif_core::inference::{ReconInit, ReconstructionConfig};
use cif_core::train::{DescriptorWeighting, TrainConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checkpoint::Checkpoint;
use crate::cloud_io::{load_cloud, save_cloud};
use crate::dataset::{gen_dataset, Family};
use crate::error::Result;
use crate::pipeline::{
    run_eval, run_interpolate, run_reconstruct, run_train, sample_clouds, write_clouds, Generated, TrainOptions,
};
use crate::report::format_eval;

#[derive(Debug, Parser)]
#[command(name = "cif", version, about = "Conditional flow generative model for 3D point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset of sphere, box and cylinder surfaces.
    GenData(GenDataArgs),
    /// Normalize and split a dataset, compute descriptors, and train both flows.
    Train(TrainArgs),
    /// Sample new clouds from a checkpoint.
    Sample(SampleArgs),
    /// Fit an embedding to a cloud with the point flow frozen and decode it.
    Reconstruct(ReconstructArgs),
    /// Decode evenly spaced points between two reconstructed embeddings.
    Interpolate(InterpolateArgs),
    /// Report MMD-CD and COV-CD against a test directory.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "sphere,box,cylinder")]
    families: Vec<String>,
    #[arg(long, default_value_t = 10)]
    clouds_per_family: usize,
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weighting {
    PerCloud,
    PerPoint,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Loss log path [default: <out>.log]
    #[arg(long)]
    log: Option<PathBuf>,
    /// Directory receiving the normalized test split [default: <out>.test]
    #[arg(long)]
    test_out: Option<PathBuf>,
    /// Also write the checkpoint every K epochs.
    #[arg(long, value_name = "K")]
    checkpoint_every: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    split_ratio: f64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0.8)]
    lr_decay: f64,
    #[arg(long, default_value_t = 40)]
    lr_decay_every: usize,
    #[arg(long, default_value_t = 8)]
    batch_clouds: usize,
    #[arg(long, default_value_t = 128)]
    points_per_cloud: usize,
    /// Hidden width of the point-flow conditioners.
    #[arg(long, default_value_t = 128)]
    f_hidden: usize,
    /// Hidden width of the embedding-flow conditioners.
    #[arg(long, default_value_t = 128)]
    g_hidden: usize,
    #[arg(long, value_enum, default_value = "per-cloud")]
    descriptor_weighting: Weighting,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long, default_value_t = 1)]
    n_clouds: usize,
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Init {
    Prior,
    Zero,
}

#[derive(Debug, Args)]
struct ReconArgs {
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, value_enum, default_value = "prior")]
    init: Init,
    /// Points per optimization step; larger clouds are resampled each step.
    #[arg(long, default_value_t = 1024)]
    max_points: usize,
    /// Points in each decoded cloud.
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ReconArgs {
    fn config(&self) -> ReconstructionConfig {
        ReconstructionConfig {
            steps: self.steps,
            lr: self.lr,
            init: match self.init {
                Init::Prior => ReconInit::Prior,
                Init::Zero => ReconInit::Zero,
            },
            max_points: self.max_points,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    recon: ReconArgs,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    cloud_a: PathBuf,
    #[arg(long)]
    cloud_b: PathBuf,
    /// Number of interpolants, endpoints included.
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Optimization steps per reconstruction.
    #[arg(long, default_value_t = 500)]
    recon_steps: usize,
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 30)]
    n_generated: usize,
    /// Points per sampled cloud [default: size of the first test cloud]
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate the clouds in this directory instead of sampling.
    #[arg(long)]
    generated: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 on success, 2 on usage errors, 1 on
/// runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => {
            let families = a.families.iter().map(|s| Family::parse(s)).collect::<Result<Vec<_>>>()?;
            let clouds = gen_dataset(&families, a.clouds_per_family, a.points, a.seed)?;
            write_clouds(&clouds, &a.out)?;
            println!("wrote {} clouds to {}", clouds.len(), a.out.display());
        }
        Command::Train(a) => {
            let weighting = match a.descriptor_weighting {
                Weighting::PerCloud => DescriptorWeighting::PerCloud,
                Weighting::PerPoint => DescriptorWeighting::PerPoint,
            };
            let opts = TrainOptions {
                log: a.log,
                test_out: a.test_out,
                seed: a.seed,
                split_ratio: a.split_ratio,
                f_hidden: a.f_hidden,
                g_hidden: a.g_hidden,
                checkpoint_every: a.checkpoint_every,
                config: TrainConfig {
                    lr0: a.lr,
                    decay_factor: a.lr_decay,
                    decay_every: a.lr_decay_every,
                    epochs: a.epochs,
                    clouds_per_batch: a.batch_clouds,
                    points_per_cloud: a.points_per_cloud,
                    weighting,
                    ..TrainConfig::default()
                },
                ..TrainOptions::new(a.data, a.out)
            };
            let quiet = a.quiet;
            run_train(&opts, |r| {
                if !quiet {
                    eprintln!("{}", crate::report::loss_line(r));
                }
            })?;
        }
        Command::Sample(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let clouds = sample_clouds(&ckpt.f, a.n_clouds, a.points, a.seed)?;
            write_clouds(&clouds, &a.out)?;
        }
        Command::Reconstruct(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let cloud = load_cloud(&a.cloud)?;
            let r = run_reconstruct(&ckpt.f, &cloud, &a.recon.config(), a.recon.points, a.recon.seed)?;
            save_cloud(&r.decoded, &a.out)?;
            println!("nll {:?}", r.reconstruction.nll);
        }
        Command::Interpolate(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let (ca, cb) = (load_cloud(&a.cloud_a)?, load_cloud(&a.cloud_b)?);
            let cfg = ReconstructionConfig { steps: a.recon_steps, seed: a.seed, ..Default::default() };
            let frames = run_interpolate(&ckpt.f, &ca, &cb, &cfg, a.steps, a.points, a.seed)?;
            let clouds: Vec<_> = frames.into_iter().map(|(_, _, c)| c).collect();
            write_clouds(&clouds, &a.out)?;
        }
        Command::Eval(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let generated = match &a.generated {
                Some(dir) => Generated::Dir(dir),
                None => Generated::Sampled { n_clouds: a.n_generated, n_points: a.points, seed: a.seed },
            };
            let (report, ids) = run_eval(&ckpt.f, &a.test, generated)?;
            print!("{}", format_eval(&report, &ids));
        }
    }
    Ok(())
}
