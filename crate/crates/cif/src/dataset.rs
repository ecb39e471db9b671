//! Dataset preparation: per-cloud normalization, train/test splitting,
//! directory loading and synthetic shape families.

use std::fs;
use std::path::Path;

use cif_core::cloud::PointCloud;
use cif_core::rng::{self, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::cloud_io::load_cloud;
use crate::error::{io_at, Error, Result};

/// Inverse of the normalization applied to one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub id: String,
    pub centroid: [f64; 3],
    pub scale: f64,
}

impl NormRecord {
    pub fn denormalize(&self, cloud: &PointCloud) -> PointCloud {
        let pts = cloud
            .points()
            .iter()
            .map(|p| {
                let mut q = [0.0; 3];
                for k in 0..3 {
                    q[k] = p[k] * self.scale + self.centroid[k];
                }
                q
            })
            .collect();
        PointCloud::new(cloud.id(), pts).expect("scaled finite points")
    }
}

/// Centers a cloud at its mean and scales it to unit maximum radius. A cloud
/// whose points all coincide keeps scale 1.
pub fn normalize_cloud(cloud: &PointCloud) -> (PointCloud, NormRecord) {
    let n = cloud.len() as f64;
    let mut c = [0.0; 3];
    for p in cloud.points() {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    c.iter_mut().for_each(|v| *v /= n);
    let centered: Vec<[f64; 3]> = cloud.points().iter().map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]).collect();
    let radius = centered.iter().map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).fold(0.0, f64::max);
    let scale = if radius > 0.0 { radius } else { 1.0 };
    let pts = centered.iter().map(|p| [p[0] / scale, p[1] / scale, p[2] / scale]).collect();
    let out = PointCloud::new(cloud.id(), pts).expect("normalized points are finite");
    (out, NormRecord { id: cloud.id().to_string(), centroid: c, scale })
}

/// Seeded shuffle; the first `ceil(ratio * n)` clouds train, the rest test.
pub fn split_dataset(clouds: &[PointCloud], ratio: f64, seed: u64) -> Result<(Vec<PointCloud>, Vec<PointCloud>)> {
    let n = clouds.len();
    if n < 2 {
        return Err(Error::Invalid("splitting needs at least two clouds".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("split ratio {ratio} must lie strictly between 0 and 1")));
    }
    // Guard against products such as 0.9 * 30 landing just above an integer.
    let n_train = ((ratio * n as f64) - 1e-9).ceil().max(1.0) as usize;
    if n_train >= n {
        return Err(Error::Invalid(format!("ratio {ratio} leaves no test clouds out of {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| clouds[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Loads every `*.xyz` file of a directory in file-name order.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<PointCloud>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io_at(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xyz"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Invalid(format!("{}: no .xyz clouds", dir.display())));
    }
    paths.iter().map(load_cloud).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sphere,
    Box,
    Cylinder,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Sphere, Family::Box, Family::Cylinder];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Box => "box",
            Family::Cylinder => "cylinder",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown family `{s}` (sphere, box, cylinder)")))
    }

    /// Random member of the family: radius in [0.5, 1.5] for spheres, edges in
    /// [0.4, 1.6] for boxes, radius in [0.2, 0.8] and height in [0.5, 2.0]
    /// for cylinders.
    pub fn draw(self, rng: &mut Rng) -> ShapeParams {
        match self {
            Family::Sphere => ShapeParams::Sphere { radius: rng.random_range(0.5..1.5) },
            Family::Box => ShapeParams::Box { edges: [0; 3].map(|_| rng.random_range(0.4..1.6)) },
            Family::Cylinder => {
                ShapeParams::Cylinder { radius: rng.random_range(0.2..0.8), height: rng.random_range(0.5..2.0) }
            }
        }
    }
}

/// Solid centered at the origin; the cylinder axis is `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeParams {
    Sphere { radius: f64 },
    Box { edges: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
}

impl ShapeParams {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            ShapeParams::Sphere { radius } => ok(radius),
            ShapeParams::Box { edges } => edges.iter().all(|&e| ok(e)),
            ShapeParams::Cylinder { radius, height } => ok(radius) && ok(height),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Invalid(format!("shape parameters must be positive: {self:?}")))
        }
    }
}

fn unit(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}

/// Points drawn uniformly over the surface of the solid.
pub fn gen_synthetic(params: ShapeParams, n_points: usize, seed: u64, id: &str) -> Result<PointCloud> {
    if n_points == 0 {
        return Err(Error::Invalid("n_points must be at least 1".into()));
    }
    params.validate()?;
    let mut r = rng::seeded(seed);
    let mut pts = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        pts.push(match params {
            ShapeParams::Sphere { radius } => loop {
                let v = rng::standard_normal(&mut r, 3);
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm > 1e-12 {
                    break [radius * v[0] / norm, radius * v[1] / norm, radius * v[2] / norm];
                }
            },
            ShapeParams::Box { edges: [a, b, c] } => {
                // Pick a face pair by area, then a side, then a point on it.
                let areas = [b * c, a * c, a * b];
                let total: f64 = areas.iter().sum();
                let u = unit(&mut r) * total;
                let axis = if u < areas[0] {
                    0
                } else if u < areas[0] + areas[1] {
                    1
                } else {
                    2
                };
                let half = [a / 2.0, b / 2.0, c / 2.0];
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = (unit(&mut r) - 0.5) * 2.0 * half[k];
                }
                p[axis] = if unit(&mut r) < 0.5 { -half[axis] } else { half[axis] };
                p
            }
            ShapeParams::Cylinder { radius, height } => {
                let side = 2.0 * std::f64::consts::PI * radius * height;
                let caps = 2.0 * std::f64::consts::PI * radius * radius;
                let theta = 2.0 * std::f64::consts::PI * unit(&mut r);
                if unit(&mut r) * (side + caps) < side {
                    [radius * theta.cos(), radius * theta.sin(), (unit(&mut r) - 0.5) * height]
                } else {
                    let rho = radius * unit(&mut r).sqrt();
                    let z = if unit(&mut r) < 0.5 { -height / 2.0 } else { height / 2.0 };
                    [rho * theta.cos(), rho * theta.sin(), z]
                }
            }
        });
    }
    Ok(PointCloud::new(id, pts)?)
}

/// Synthetic dataset: `per_family` clouds of each family with random family
/// parameters. Ids are `<family>_<k>` with `k` zero-padded.
pub fn gen_dataset(families: &[Family], per_family: usize, n_points: usize, seed: u64) -> Result<Vec<PointCloud>> {
    let mut out = Vec::with_capacity(families.len() * per_family);
    for (fi, fam) in families.iter().enumerate() {
        let mut prng = rng::seeded(rng::derive(seed, 2 * fi as u64));
        for k in 0..per_family {
            let params = fam.draw(&mut prng);
            let s = rng::derive(rng::derive(seed, 2 * fi as u64 + 1), k as u64);
            out.push(gen_synthetic(params, n_points, s, &format!("{}_{k:03}", fam.name()))?);
        }
    }
    Ok(out)
}
