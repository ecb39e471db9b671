//! Classical (Torgerson) multidimensional scaling.
//!
//! `B = -1/2 J D2 J` with `D2` the elementwise-squared dissimilarities and
//! `J = I - 11^T / n`; coordinates are `V_k sqrt(L_k)` over the leading
//! eigenpairs. Negative eigenvalues (non-Euclidean input) are clamped to
//! zero, and columns beyond the number of positive eigenvalues are zero.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chamfer::DistanceMatrix;
use crate::eigen::jacobi_eigen;
use crate::math;
use crate::{Error, Result};

/// Per-cloud descriptors aligned with `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub ids: Vec<String>,
    pub dim: usize,
    /// Row-major `n x dim`.
    pub w: Vec<f64>,
    /// Retained eigenvalues (unclamped), one per output column that exists.
    pub eigen_spectrum: Vec<f64>,
}

impl DescriptorSet {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Double-centered Gram matrix of squared dissimilarities.
pub fn double_center(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.n();
    let sq: Vec<f64> = d.values().iter().map(|v| v * v).collect();
    let mut row_mean = vec![0.0; n];
    for i in 0..n {
        row_mean[i] = sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
    }
    // D2 is symmetric, so column means equal row means.
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    b
}

const RANK_TOL: f64 = 1e-12;

pub fn classical_mds(d: &DistanceMatrix, out_dim: usize) -> Result<DescriptorSet> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidParam("MDS needs at least two items".into()));
    }
    if out_dim == 0 {
        return Err(Error::InvalidParam("MDS output dimension must be positive".into()));
    }
    let b = double_center(d);
    let eig = jacobi_eigen(&b, n)?;
    let kept = out_dim.min(n);
    // Eigenvalues at roundoff level relative to the largest count as zero.
    let cutoff = RANK_TOL * eig.values[0].max(0.0);
    let mut w = vec![0.0; n * out_dim];
    for k in 0..kept {
        let lambda = eig.values[k];
        if lambda <= cutoff {
            continue;
        }
        let scale = math::sqrt(lambda);
        for i in 0..n {
            w[i * out_dim + k] = eig.vectors[i * n + k] * scale;
        }
    }
    Ok(DescriptorSet { ids: d.ids().to_vec(), dim: out_dim, w, eigen_spectrum: eig.values[..kept].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};
    use alloc::format;

    fn euclid(points: &[Vec<f64>]) -> DistanceMatrix {
        let n = points.len();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    v[i * n + j] = math::sqrt(s);
                }
            }
        }
        // Mirror to make symmetry exact.
        for i in 0..n {
            for j in i + 1..n {
                v[j * n + i] = v[i * n + j];
            }
        }
        DistanceMatrix::new((0..n).map(|i| format!("p{i}")).collect(), v).unwrap()
    }

    fn recovered_error(d: &DistanceMatrix, s: &DescriptorSet) -> f64 {
        let n = d.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = s.row(i).iter().zip(s.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                worst = worst.max((math::sqrt(r) - d.get(i, j)).abs());
            }
        }
        worst
    }

    #[test]
    fn zero_distances() {
        let d = DistanceMatrix::new((0..4).map(|i| format!("{i}")).collect(), vec![0.0; 16]).unwrap();
        let s = classical_mds(&d, 64).unwrap();
        assert!(s.w.iter().all(|&v| v == 0.0));
        assert_eq!(s.w.len(), 4 * 64);
    }

    #[test]
    fn collinear_points() {
        let d = euclid(&[vec![0.0], vec![1.0], vec![2.0]]);
        let s = classical_mds(&d, 2).unwrap();
        assert!(recovered_error(&d, &s) < 1e-8);
        // Collinear: one positive eigenvalue, second column is zero.
        assert!(s.w.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }

    #[test]
    fn euclidean_recovery_in_64_dims() {
        let mut rng = seeded(30);
        let pts: Vec<Vec<f64>> = (0..10).map(|_| standard_normal(&mut rng, 3)).collect();
        let d = euclid(&pts);
        let s = classical_mds(&d, 64).unwrap();
        assert!(recovered_error(&d, &s) < 1e-8);
        // Rank 3: everything past the third column is numerically zero.
        for i in 0..10 {
            assert!(s.row(i)[3..].iter().all(|&v| v == 0.0), "{:?}", &s.row(i)[3..10]);
        }
    }
}
