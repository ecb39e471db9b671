//! Minimum matching distance and coverage under Chamfer distance.
//!
//! MMD-CD: mean over reference clouds of the distance to the nearest
//! generated cloud. COV-CD: fraction of reference clouds that are the nearest
//! reference of at least one generated cloud. Nearest-neighbour ties go to
//! the lowest reference index.

use alloc::vec;
use alloc::vec::Vec;

use crate::chamfer::cross_cd_matrix;
use crate::cloud::PointCloud;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mmd_cd: f64,
    pub cov_cd: f64,
    pub n_generated: usize,
    pub n_reference: usize,
    /// Per reference cloud: CD to its nearest generated cloud.
    pub nearest_generated: Vec<f64>,
    /// Per generated cloud: index of its nearest reference cloud.
    pub matched_reference: Vec<usize>,
}

fn check(generated: &[PointCloud], reference: &[PointCloud]) -> Result<()> {
    if generated.is_empty() {
        return Err(Error::EmptySet("generated clouds"));
    }
    if reference.is_empty() {
        return Err(Error::EmptySet("reference clouds"));
    }
    Ok(())
}

/// Both metrics from one `|G| x |R|` Chamfer matrix.
pub fn evaluate(generated: &[PointCloud], reference: &[PointCloud]) -> Result<EvalReport> {
    check(generated, reference)?;
    let (ng, nr) = (generated.len(), reference.len());
    let cd = cross_cd_matrix(generated, reference)?;

    let mut nearest_generated = vec![f64::INFINITY; nr];
    for gi in 0..ng {
        for r in 0..nr {
            let d = cd[gi * nr + r];
            if d < nearest_generated[r] {
                nearest_generated[r] = d;
            }
        }
    }
    let mmd_cd = nearest_generated.iter().sum::<f64>() / nr as f64;

    let mut covered = vec![false; nr];
    let mut matched_reference = Vec::with_capacity(ng);
    for gi in 0..ng {
        let row = &cd[gi * nr..(gi + 1) * nr];
        let mut best = 0;
        for r in 1..nr {
            if row[r] < row[best] {
                best = r;
            }
        }
        covered[best] = true;
        matched_reference.push(best);
    }
    let cov_cd = covered.iter().filter(|&&c| c).count() as f64 / nr as f64;

    Ok(EvalReport { mmd_cd, cov_cd, n_generated: ng, n_reference: nr, nearest_generated, matched_reference })
}

pub fn mmd_cd(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64> {
    Ok(evaluate(generated, reference)?.mmd_cd)
}

pub fn coverage_cd(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64> {
    Ok(evaluate(generated, reference)?.cov_cd)
}
