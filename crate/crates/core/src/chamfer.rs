//! Chamfer distance between point clouds.
//!
//! `CD(A, B) = mean_a min_b |a - b|^2 + mean_b min_a |a - b|^2`, computed by
//! brute force with a fixed row-major accumulation order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::{Error, Result};

#[inline]
fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn mean_nearest(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let mut total = 0.0;
    for a in from {
        let mut best = f64::INFINITY;
        for b in to {
            let d = sq_dist(a, b);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    total / from.len() as f64
}

pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(mean_nearest(a.points(), b.points()) + mean_nearest(b.points(), a.points()))
}

/// Symmetric matrix of pairwise dissimilarities with row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, a zero diagonal and nonnegative entries.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: values.len() });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidParam(alloc::format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParam(alloc::format!("invalid distance at ({i},{j})")));
                }
                if v != values[j * n + i] {
                    return Err(Error::NotSymmetric((v - values[j * n + i]).abs()));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `M[i][j] = CD(cloud_i, cloud_j)`, computed for `i < j` and mirrored.
pub fn pairwise_cd_matrix(clouds: &[PointCloud]) -> Result<DistanceMatrix> {
    if clouds.len() < 2 {
        return Err(Error::InvalidParam("pairwise distances need at least two clouds".into()));
    }
    let n = clouds.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = chamfer_distance(&clouds[i], &clouds[j])?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    let ids = clouds.iter().map(|c| String::from(c.id())).collect();
    DistanceMatrix::new(ids, values)
}

/// Rectangular `|rows| x |cols|` Chamfer matrix, row-major.
pub fn cross_cd_matrix(rows: &[PointCloud], cols: &[PointCloud]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for r in rows {
        for c in cols {
            out.push(chamfer_distance(r, c)?);
        }
    }
    Ok(out)
}
