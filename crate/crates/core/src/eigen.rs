//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-10;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    math::sqrt(s)
}

/// Eigendecomposition of the row-major symmetric `n x n` matrix `s`.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-10 * min(1, |S|_F)`. Each eigenvector is signed so that its
/// largest-magnitude entry (first on ties) is positive.
pub fn jacobi_eigen(s: &[f64], n: usize) -> Result<SymmetricEigen> {
    if s.len() != n * n {
        return Err(Error::Dimension { expected: n * n, got: s.len() });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigen input".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((s[i * n + j] - s[j * n + i]).abs());
        }
    }
    if worst > 1e-12 {
        return Err(Error::NotSymmetric(worst));
    }

    let mut a = s.to_vec();
    // Exact symmetry for the rotations.
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = math::sqrt(a.iter().map(|x| x * x).sum());
    let tol = OFF_DIAGONAL_TOL * frob.min(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let sn = t * c;
                rotate(&mut a, &mut v, n, p, q, c, sn);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        let mut best = 0;
        for i in 0..n {
            if v[i * n + k].abs() > v[best * n + k].abs() {
                best = i;
            }
        }
        let sign = if v[best * n + k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + col] = sign * v[i * n + k];
        }
    }
    Ok(SymmetricEigen { n, values, vectors })
}

/// `A <- J^T A J`, `V <- V J` for the rotation in the `(p, q)` plane.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let (akp, akq) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};

    fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
        v.fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn diagonal_input() {
        let e = jacobi_eigen(&[3., 0., 0., 0., 1., 0., 0., 0., 2.], 3).unwrap();
        assert_eq!(e.values, vec![3., 2., 1.]);
        assert_eq!(e.vector(0), vec![1., 0., 0.]);
        assert_eq!(e.vector(1), vec![0., 0., 1.]);
        assert_eq!(e.vector(2), vec![0., 1., 0.]);
    }

    #[test]
    fn two_by_two() {
        let e = jacobi_eigen(&[2., 1., 1., 2.], 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - r).abs() < 1e-14 && (v0[1] - r).abs() < 1e-14);
        // Largest-magnitude entry positive; both have equal magnitude so the first wins.
        assert!((v1[0] - r).abs() < 1e-14 && (v1[1] + r).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = seeded(20);
        let n = 20;
        let r = standard_normal(&mut rng, n * n);
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = r[i * n + j] + r[j * n + i];
            }
        }
        let e = jacobi_eigen(&s, n).unwrap();
        let mut recon_err: f64 = 0.0;
        let mut ortho_err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let rec: f64 = (0..n).map(|k| e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k]).sum();
                recon_err = recon_err.max((rec - s[i * n + j]).abs());
                let dot: f64 = (0..n).map(|k| e.vectors[k * n + i] * e.vectors[k * n + j]).sum();
                ortho_err = ortho_err.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        assert!(recon_err < 1e-8, "{recon_err}");
        assert!(ortho_err < 1e-8, "{ortho_err}");
        for k in 0..n {
            let v = e.vector(k);
            let resid = max_abs((0..n).map(|i| (0..n).map(|j| s[i * n + j] * v[j]).sum::<f64>() - e.values[k] * v[i]));
            assert!(resid < 1e-8);
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(matches!(jacobi_eigen(&[1., 2., 3., 1.], 2), Err(Error::NotSymmetric(_))));
        assert!(jacobi_eigen(&[1., 2., 3.], 2).is_err());
    }

    #[test]
    fn zero_matrix() {
        let e = jacobi_eigen(&[0.0; 9], 3).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }
}
