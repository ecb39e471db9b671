//! Binary checkpoints.
//!
//! Layout: the 8-byte magic `CIFPCGN1`, a little-endian `u64` header length,
//! a UTF-8 text header, then the raw little-endian `f64` payload of every
//! `tensor` line in header order. The header starts with `version 1`; the
//! remaining lines carry architectures, training configuration, seeds,
//! descriptor ids and normalization records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cif_core::flow::{FlowArch, FlowModel, HeadInit, Permutation};
use cif_core::mds::DescriptorSet;
use cif_core::rng;
use cif_core::tensor::Tensor;
use cif_core::train::{AdamParams, AdamState, DescriptorWeighting, TrainConfig};

use crate::dataset::NormRecord;
use crate::error::{io_at, Error, Result};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 8] = b"CIFPCGN1";
pub const VERSION: &str = "1";

/// Seeds every stage of a training run was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedLineage {
    pub run: u64,
    pub split: u64,
    pub init: u64,
    pub train: u64,
}

impl SeedLineage {
    pub fn from_run(run: u64) -> Self {
        Self { run, split: rng::derive(run, 1), init: rng::derive(run, 2), train: rng::derive(run, 3) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub f: FlowModel,
    pub g: FlowModel,
    pub descriptors: DescriptorSet,
    pub config: TrainConfig,
    pub normalization: Vec<NormRecord>,
    pub seeds: SeedLineage,
    pub epochs_done: usize,
    pub adam: AdamState,
}

fn write_arch(h: &mut String, tag: &str, a: &FlowArch) {
    let _ = writeln!(
        h,
        "arch {tag} {} {} {} {} {} {} {} {:?}",
        a.dim,
        a.split,
        a.segments,
        a.blocks_per_segment,
        a.hidden,
        a.cond_dim,
        a.permutation.tag(),
        a.scale_clamp
    );
}

fn check_token(s: &str) -> Result<&str> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Invalid(format!("id `{s}` cannot be stored: ids must be non-empty without whitespace")));
    }
    Ok(s)
}

type NamedTensor<'a> = (String, Vec<usize>, &'a [f64]);

impl Checkpoint {
    fn tensors(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        for model in [&self.f, &self.g] {
            for (name, t) in model.tensors() {
                out.push((name, t.shape().to_vec(), t.data()));
            }
        }
        let d = &self.descriptors;
        out.push(("descriptors.w".into(), vec![d.n(), d.dim], &d.w[..]));
        out.push(("descriptors.spectrum".into(), vec![d.eigen_spectrum.len()], &d.eigen_spectrum[..]));
        for (name, m, v) in self.adam.moments() {
            out.push((format!("adam.m.{name}"), m.shape().to_vec(), m.data()));
            out.push((format!("adam.v.{name}"), v.shape().to_vec(), v.data()));
        }
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let c = &self.config;
        let mut h = String::new();
        let _ = writeln!(h, "version {VERSION}");
        write_arch(&mut h, "f", self.f.arch());
        write_arch(&mut h, "g", self.g.arch());
        let _ = writeln!(h, "config lr0 {:?}", c.lr0);
        let _ = writeln!(h, "config decay_factor {:?}", c.decay_factor);
        let _ = writeln!(h, "config decay_every {}", c.decay_every);
        let _ = writeln!(h, "config beta1 {:?}", c.adam.beta1);
        let _ = writeln!(h, "config beta2 {:?}", c.adam.beta2);
        let _ = writeln!(h, "config eps {:?}", c.adam.eps);
        let _ = writeln!(h, "config epochs {}", c.epochs);
        let _ = writeln!(h, "config clouds_per_batch {}", c.clouds_per_batch);
        let _ = writeln!(h, "config points_per_cloud {}", c.points_per_cloud);
        let _ = writeln!(h, "config seed {}", c.seed);
        let _ = writeln!(h, "config weighting {}", c.weighting.tag());
        let s = &self.seeds;
        let _ = writeln!(h, "seeds {} {} {} {}", s.run, s.split, s.init, s.train);
        let _ = writeln!(h, "epochs_done {}", self.epochs_done);
        let _ = writeln!(h, "adam_step {}", self.adam.step_count());
        for id in &self.descriptors.ids {
            let _ = writeln!(h, "descriptor {}", check_token(id)?);
        }
        for r in &self.normalization {
            let [x, y, z] = r.centroid;
            let _ = writeln!(h, "norm {} {x:?} {y:?} {z:?} {:?}", check_token(&r.id)?, r.scale);
        }
        let tensors = self.tensors();
        for (name, shape, _) in &tensors {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            let _ = writeln!(h, "tensor {name} {}", dims.join(" "));
        }

        let payload: usize = tensors.iter().map(|t| t.2.len() * 8).sum();
        let mut out = Vec::with_capacity(16 + h.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(h.len() as u64).to_le_bytes());
        out.extend_from_slice(h.as_bytes());
        for (_, _, data) in &tensors {
            for v in *data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 && MAGIC.starts_with(bytes) {
            return Err(Error::Truncated("magic".into()));
        }
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        let len_bytes: [u8; 8] =
            bytes.get(8..16).ok_or_else(|| Error::Truncated("header length".into()))?.try_into().expect("8 bytes");
        let header_len = usize::try_from(u64::from_le_bytes(len_bytes))
            .map_err(|_| Error::Truncated("header length out of range".into()))?;
        let header =
            bytes.get(16..16usize.saturating_add(header_len)).ok_or_else(|| Error::Truncated("header".into()))?;
        let header = std::str::from_utf8(header).map_err(|_| Error::Header("header is not UTF-8".into()))?;
        let mut parsed = Header::parse(header)?;

        let mut payload = &bytes[16 + header_len..];
        let mut tensors = BTreeMap::new();
        for (name, shape) in std::mem::take(&mut parsed.tensors) {
            let n: usize = shape.iter().product();
            if payload.len() < n * 8 {
                return Err(Error::Truncated(format!("payload of `{name}`")));
            }
            let (head, rest) = payload.split_at(n * 8);
            payload = rest;
            let data: Vec<f64> =
                head.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            if tensors.insert(name.clone(), (shape, data)).is_some() {
                return Err(Error::Header(format!("tensor `{name}` listed twice")));
            }
        }
        if !payload.is_empty() {
            return Err(Error::Header(format!("{} bytes after the last tensor", payload.len())));
        }
        parsed.build(tensors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(io_at(path))?;
        Self::from_bytes(&bytes)
    }
}

type RawTensors = BTreeMap<String, (Vec<usize>, Vec<f64>)>;

#[derive(Default)]
struct Header {
    archs: BTreeMap<String, FlowArch>,
    config: BTreeMap<String, String>,
    seeds: Option<SeedLineage>,
    epochs_done: Option<usize>,
    adam_step: Option<u64>,
    ids: Vec<String>,
    norms: Vec<NormRecord>,
    tensors: Vec<(String, Vec<usize>)>,
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Header(format!("bad {what} `{s}`")))
}

impl Header {
    fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(|l| l.split_whitespace().collect::<Vec<_>>()) {
            Some(v) if v.len() == 2 && v[0] == "version" => {
                if v[1] != VERSION {
                    return Err(Error::UnknownVersion(v[1].to_string()));
                }
            }
            _ => return Err(Error::Header("missing version line".into())),
        }
        let mut h = Header::default();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Header(format!("malformed line `{line}`"));
            match f.first().copied() {
                Some("arch") if f.len() == 10 => {
                    let arch = FlowArch {
                        dim: num(f[2], "dim")?,
                        split: num(f[3], "split")?,
                        segments: num(f[4], "segments")?,
                        blocks_per_segment: num(f[5], "blocks")?,
                        hidden: num(f[6], "hidden")?,
                        cond_dim: num(f[7], "cond_dim")?,
                        permutation: Permutation::from_tag(f[8])
                            .ok_or_else(|| Error::Header(format!("unknown permutation `{}`", f[8])))?,
                        scale_clamp: num(f[9], "scale clamp")?,
                    };
                    h.archs.insert(f[1].to_string(), arch);
                }
                Some("config") if f.len() == 3 => {
                    h.config.insert(f[1].to_string(), f[2].to_string());
                }
                Some("seeds") if f.len() == 5 => {
                    h.seeds = Some(SeedLineage {
                        run: num(f[1], "seed")?,
                        split: num(f[2], "seed")?,
                        init: num(f[3], "seed")?,
                        train: num(f[4], "seed")?,
                    });
                }
                Some("epochs_done") if f.len() == 2 => h.epochs_done = Some(num(f[1], "epoch count")?),
                Some("adam_step") if f.len() == 2 => h.adam_step = Some(num(f[1], "step count")?),
                Some("descriptor") if f.len() == 2 => h.ids.push(f[1].to_string()),
                Some("norm") if f.len() == 6 => h.norms.push(NormRecord {
                    id: f[1].to_string(),
                    centroid: [num(f[2], "centroid")?, num(f[3], "centroid")?, num(f[4], "centroid")?],
                    scale: num(f[5], "scale")?,
                }),
                Some("tensor") if f.len() >= 2 => {
                    let shape = f[2..].iter().map(|d| num(d, "dimension")).collect::<Result<Vec<usize>>>()?;
                    h.tensors.push((f[1].to_string(), shape));
                }
                _ => return Err(bad()),
            }
        }
        Ok(h)
    }

    fn config_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.config.get(key).ok_or_else(|| Error::Header(format!("missing config `{key}`")))?;
        num(v, key)
    }

    fn model(&self, tag: &str, tensors: &mut RawTensors) -> Result<FlowModel> {
        let arch = *self.archs.get(tag).ok_or_else(|| Error::Header(format!("missing arch `{tag}`")))?;
        let mut model = FlowModel::new(arch, tag, HeadInit::Zero, &mut rng::seeded(0))?;
        for (name, t) in model.tensors_mut() {
            let (shape, data) =
                tensors.remove(&name).ok_or_else(|| Error::Header(format!("missing tensor `{name}`")))?;
            if shape != t.shape() {
                return Err(Error::Header(format!("tensor `{name}` has shape {shape:?}, expected {:?}", t.shape())));
            }
            *t = Tensor::new(shape, data)?;
        }
        Ok(model)
    }

    fn build(self, mut tensors: RawTensors) -> Result<Checkpoint> {
        let f = self.model("f", &mut tensors)?;
        let g = self.model("g", &mut tensors)?;

        let weighting = self.config.get("weighting").and_then(|w| DescriptorWeighting::from_tag(w));
        let config = TrainConfig {
            lr0: self.config_value("lr0")?,
            decay_factor: self.config_value("decay_factor")?,
            decay_every: self.config_value("decay_every")?,
            adam: AdamParams {
                beta1: self.config_value("beta1")?,
                beta2: self.config_value("beta2")?,
                eps: self.config_value("eps")?,
            },
            epochs: self.config_value("epochs")?,
            clouds_per_batch: self.config_value("clouds_per_batch")?,
            points_per_cloud: self.config_value("points_per_cloud")?,
            seed: self.config_value("seed")?,
            weighting: weighting.ok_or_else(|| Error::Header("missing or unknown weighting".into()))?,
        };

        let (wshape, w) = tensors.remove("descriptors.w").ok_or_else(|| Error::Header("missing descriptors".into()))?;
        let (_, eigen_spectrum) = tensors.remove("descriptors.spectrum").unwrap_or_default();
        if wshape.len() != 2 || wshape[0] != self.ids.len() {
            return Err(Error::Header(format!("descriptor matrix {wshape:?} does not match {} ids", self.ids.len())));
        }
        let descriptors = DescriptorSet { ids: self.ids, dim: wshape[1], w, eigen_spectrum };

        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        for (name, (shape, data)) in tensors {
            let t = Tensor::new(shape, data)?;
            if let Some(p) = name.strip_prefix("adam.m.") {
                first.insert(p.to_string(), t);
            } else if let Some(p) = name.strip_prefix("adam.v.") {
                second.insert(p.to_string(), t);
            } else {
                return Err(Error::Header(format!("unexpected tensor `{name}`")));
            }
        }
        let adam = AdamState::from_parts(self.adam_step.unwrap_or(0), first, second)?;

        Ok(Checkpoint {
            f,
            g,
            descriptors,
            config,
            normalization: self.norms,
            seeds: self.seeds.ok_or_else(|| Error::Header("missing seeds".into()))?,
            epochs_done: self.epochs_done.ok_or_else(|| Error::Header("missing epochs_done".into()))?,
            adam,
        })
    }
}
