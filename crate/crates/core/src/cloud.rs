use alloc::string::String;
use alloc::vec::Vec;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// One shape as a set of 3D points. Storage order carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    id: String,
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(id: impl Into<String>, points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        Ok(Self { id: id.into(), points })
    }

    /// Builds a cloud from a `[N, 3]` tensor.
    pub fn from_tensor(id: impl Into<String>, t: &Tensor) -> Result<Self> {
        if t.shape().len() != 2 || t.shape()[1] != 3 {
            return Err(Error::Dimension { expected: 3, got: t.last_dim() });
        }
        let points = t.data().chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        Self::new(id, points)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_raw(alloc::vec![self.points.len(), 3], self.points.iter().flatten().copied().collect())
    }

    /// Rows selected by index, as a `[k, 3]` tensor.
    pub fn gather(&self, idx: &[usize]) -> Tensor {
        Tensor::from_raw(alloc::vec![idx.len(), 3], idx.iter().flat_map(|&i| self.points[i]).collect())
    }
}
