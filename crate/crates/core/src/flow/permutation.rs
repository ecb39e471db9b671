use alloc::vec::Vec;

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Fixed coordinate permutation applied after each coupling block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Permutation {
    /// `out[i] = v[(i - 1) mod D]`.
    ShiftRight,
    /// `out = (v[D/2..], v[..D/2])`; requires even `D`.
    SwapHalves,
}

impl Permutation {
    pub fn tag(self) -> &'static str {
        match self {
            Permutation::ShiftRight => "shift-right",
            Permutation::SwapHalves => "swap-halves",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "shift-right" => Some(Permutation::ShiftRight),
            "swap-halves" => Some(Permutation::SwapHalves),
            _ => None,
        }
    }

    pub fn check(self, dim: usize) -> Result<()> {
        match self {
            Permutation::SwapHalves if !dim.is_multiple_of(2) => {
                Err(Error::InvalidParam(alloc::format!("swap-halves needs an even dimension, got {dim}")))
            }
            _ if dim == 0 => Err(Error::InvalidParam("empty vector".into())),
            _ => Ok(()),
        }
    }

    /// Source index for each output coordinate.
    fn source(self, dim: usize, i: usize) -> usize {
        match self {
            Permutation::ShiftRight => (i + dim - 1) % dim,
            Permutation::SwapHalves => (i + dim / 2) % dim,
        }
    }

    fn inverse_source(self, dim: usize, i: usize) -> usize {
        match self {
            Permutation::ShiftRight => (i + 1) % dim,
            Permutation::SwapHalves => (i + dim / 2) % dim,
        }
    }

    pub fn apply(self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        Ok((0..v.len()).map(|i| v[self.source(v.len(), i)]).collect())
    }

    pub fn apply_inverse(self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        Ok((0..v.len()).map(|i| v[self.inverse_source(v.len(), i)]).collect())
    }

    /// Row-wise permutation of a `[P, D]` batch.
    pub(crate) fn apply_rows(self, x: &Tensor, inverse: bool) -> Tensor {
        let d = x.last_dim();
        let mut out = Vec::with_capacity(x.len());
        for row in x.data().chunks_exact(d) {
            for i in 0..d {
                let s = if inverse { self.inverse_source(d, i) } else { self.source(d, i) };
                out.push(row[s]);
            }
        }
        Tensor::from_raw(x.shape().to_vec(), out)
    }

    pub(crate) fn build(self, g: &mut Graph, x: NodeId, dim: usize) -> NodeId {
        match self {
            Permutation::ShiftRight => {
                let last = g.slice(x, dim - 1, dim);
                let rest = g.slice(x, 0, dim - 1);
                g.concat(&[last, rest])
            }
            Permutation::SwapHalves => {
                let hi = g.slice(x, dim / 2, dim);
                let lo = g.slice(x, 0, dim / 2);
                g.concat(&[hi, lo])
            }
        }
    }
}

/// Applies a fixed permutation to one vector.
pub fn apply_permutation(kind: Permutation, v: &[f64]) -> Result<Vec<f64>> {
    kind.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn shift_right_examples() {
        assert_eq!(Permutation::ShiftRight.apply(&[1., 2., 3.]).unwrap(), vec![3., 1., 2.]);
        let mut v = vec![1., 2., 3.];
        for _ in 0..3 {
            v = Permutation::ShiftRight.apply(&v).unwrap();
        }
        assert_eq!(v, vec![1., 2., 3.]);
    }

    #[test]
    fn swap_halves_examples() {
        let once = Permutation::SwapHalves.apply(&[1., 2., 3., 4.]).unwrap();
        assert_eq!(once, vec![3., 4., 1., 2.]);
        assert_eq!(Permutation::SwapHalves.apply(&once).unwrap(), vec![1., 2., 3., 4.]);
        assert!(Permutation::SwapHalves.apply(&[1., 2., 3.]).is_err());
    }

    proptest! {
        #[test]
        fn inverse_and_cycle_order(v in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            for kind in [Permutation::ShiftRight, Permutation::SwapHalves] {
                if kind.check(v.len()).is_err() { continue; }
                let p = kind.apply(&v).unwrap();
                prop_assert_eq!(kind.apply_inverse(&p).unwrap(), v.clone());
                let mut sorted_in = v.clone();
                let mut sorted_out = p.clone();
                sorted_in.sort_by(f64::total_cmp);
                sorted_out.sort_by(f64::total_cmp);
                prop_assert_eq!(sorted_in, sorted_out);
                let order = if kind == Permutation::ShiftRight { v.len() } else { 2 };
                let mut w = v.clone();
                for _ in 0..order { w = kind.apply(&w).unwrap(); }
                prop_assert_eq!(w, v.clone());
            }
        }
    }
}
