//! Dense row-major float64 tensors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A dense, row-major array of finite `f64` values.
///
/// Rank 0 (`shape == []`) is a scalar; the graph primitives use ranks 0 to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, rejecting a shape/length mismatch and any NaN or infinity.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::ShapeData { shape, len: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor element {i}")));
        }
        Ok(Self { shape, data })
    }

    /// Unchecked construction for kernel outputs; callers check finiteness.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; len] }
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the values. Callers must keep them finite.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    /// Rows and columns of a rank-2 tensor; a rank-1 tensor is one row.
    pub fn dims2(&self) -> Option<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Some((*r, *c)),
            [c] => Some((1, *c)),
            _ => None,
        }
    }

    /// Extent of the last axis (1 for scalars).
    pub fn last_dim(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.last_dim();
        &self.data[r * c..(r + 1) * c]
    }
}

/// `C = op(A) * op(B)` (optionally accumulated into `C`) for row-major
/// matrices, transposes expressed through strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        return;
    }
    // op(A) is m x k. Stored A is m x k (rs=k, cs=1) or k x m (rs=1, cs=m).
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: slice lengths cover the strided extents checked by the callers
    // (a: m*k, b: k*n, c: m*n).
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Matrix product of `[m,k] x [k,n]`; a rank-1 right operand is treated as
/// a column vector and yields `[m]`.
pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> core::result::Result<Tensor, alloc::string::String> {
    let (m, k) = match a.shape() {
        [m, k] => (*m, *k),
        s => return Err(format!("left operand must be a matrix, got {s:?}")),
    };
    match b.shape() {
        [k2, n] => {
            if *k2 != k {
                return Err(format!("inner dimensions differ: [{m},{k}] x [{k2},{n}]"));
            }
            let mut out = vec![0.0; m * n];
            gemm(m, k, *n, a.data(), false, b.data(), false, &mut out, false);
            Ok(Tensor::from_raw(vec![m, *n], out))
        }
        [k2] => {
            if *k2 != k {
                return Err(format!("inner dimensions differ: [{m},{k}] x [{k2}]"));
            }
            let mut out = vec![0.0; m];
            gemm(m, k, 1, a.data(), false, b.data(), false, &mut out, false);
            Ok(Tensor::from_raw(vec![m], out))
        }
        s => Err(format!("right operand must be rank 1 or 2, got {s:?}")),
    }
}

/// Elementwise sum; the right operand may also be a bias row (`[n]` or
/// `[1,n]`) added to every row of a `[m,n]` left operand.
pub(crate) fn add(a: &Tensor, b: &Tensor) -> core::result::Result<Tensor, alloc::string::String> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
        return Ok(Tensor::from_raw(a.shape().to_vec(), data));
    }
    if is_bias_for(a, b) {
        let n = b.len();
        let mut data = a.data().to_vec();
        for row in data.chunks_exact_mut(n) {
            for (v, bias) in row.iter_mut().zip(b.data()) {
                *v += bias;
            }
        }
        return Ok(Tensor::from_raw(a.shape().to_vec(), data));
    }
    Err(format!("cannot add {:?} and {:?}", a.shape(), b.shape()))
}

/// Whether `b` is a bias row for the matrix `a`.
pub(crate) fn is_bias_for(a: &Tensor, b: &Tensor) -> bool {
    match (a.shape(), b.shape()) {
        ([_, n], [n2]) | ([_, n], [1, n2]) => n == n2,
        _ => false,
    }
}

pub(crate) fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_raw(a.shape().to_vec(), a.data().iter().map(|&v| f(v)).collect())
}

pub(crate) fn zip_map(
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> core::result::Result<Tensor, alloc::string::String> {
    if a.shape() != b.shape() {
        return Err(format!("shapes differ: {:?} vs {:?}", a.shape(), b.shape()));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Ok(Tensor::from_raw(a.shape().to_vec(), data))
}

/// Concatenation along the last axis; all operands share the leading shape.
pub(crate) fn concat_last(parts: &[&Tensor]) -> core::result::Result<Tensor, alloc::string::String> {
    let first = parts.first().ok_or_else(|| alloc::string::String::from("nothing to concatenate"))?;
    let lead = &first.shape()[..first.shape().len().saturating_sub(1)];
    if first.shape().is_empty() {
        return Err("cannot concatenate scalars".into());
    }
    let mut width = 0;
    for p in parts {
        let s = p.shape();
        if s.len() != first.shape().len() || &s[..s.len() - 1] != lead {
            return Err(format!("leading shapes differ: {:?} vs {:?}", first.shape(), s));
        }
        width += s[s.len() - 1];
    }
    let rows: usize = lead.iter().product();
    let mut data = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    let mut shape = lead.to_vec();
    shape.push(width);
    Ok(Tensor::from_raw(shape, data))
}

/// Columns `start..end` of the last axis.
pub(crate) fn slice_last(a: &Tensor, start: usize, end: usize) -> core::result::Result<Tensor, alloc::string::String> {
    if a.shape().is_empty() {
        return Err("cannot slice a scalar".into());
    }
    let width = a.last_dim();
    if start >= end || end > width {
        return Err(format!("slice {start}..{end} out of range for width {width}"));
    }
    let rows = a.len() / width;
    let mut data = Vec::with_capacity(rows * (end - start));
    for r in 0..rows {
        data.extend_from_slice(&a.row(r)[start..end]);
    }
    let mut shape = a.shape().to_vec();
    *shape.last_mut().unwrap() = end - start;
    Ok(Tensor::from_raw(shape, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(Tensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::new(vec![1], vec![f64::INFINITY]).is_err());
        assert!(matches!(Tensor::new(vec![2, 2], vec![1.0; 3]), Err(Error::ShapeData { .. })));
        assert_eq!(Tensor::scalar(2.5).unwrap().item(), Some(2.5));
    }

    #[test]
    fn matmul_transposed_strides() {
        // A = [[1,2,3],[4,5,6]], B = [[1,0],[0,1],[1,1]]
        let a = Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::matrix(3, 2, vec![1., 0., 0., 1., 1., 1.]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[4., 5., 10., 11.]);
        // A^T * A via the transposed path: 3x3
        let mut out = vec![0.0; 9];
        gemm(3, 2, 3, a.data(), true, a.data(), false, &mut out, false);
        assert_eq!(out, vec![17., 22., 27., 22., 29., 36., 27., 36., 45.]);
        // A * A^T: 2x2
        let mut out = vec![1.0; 4];
        gemm(2, 3, 2, a.data(), false, a.data(), true, &mut out, true);
        assert_eq!(out, vec![15., 33., 33., 78.]);
    }

    #[test]
    fn bias_broadcast_only() {
        let a = Tensor::matrix(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let b = Tensor::vector(vec![10., 20.]).unwrap();
        assert_eq!(add(&a, &b).unwrap().data(), &[11., 22., 13., 24.]);
        let row = Tensor::matrix(1, 2, vec![1., 1.]).unwrap();
        assert_eq!(add(&a, &row).unwrap().data(), &[2., 3., 4., 5.]);
        let bad = Tensor::vector(vec![1., 2., 3.]).unwrap();
        assert!(add(&a, &bad).is_err());
        let col = Tensor::matrix(2, 1, vec![1., 1.]).unwrap();
        assert!(add(&a, &col).is_err());
    }

    #[test]
    fn concat_and_slice() {
        let a = Tensor::matrix(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let b = Tensor::matrix(2, 1, vec![5., 6.]).unwrap();
        let c = concat_last(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c.data(), &[1., 2., 5., 3., 4., 6.]);
        let s = slice_last(&c, 1, 3).unwrap();
        assert_eq!(s.data(), &[2., 5., 4., 6.]);
        assert!(slice_last(&c, 2, 2).is_err());
    }
}
