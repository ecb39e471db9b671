use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates per named parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    step: u64,
    first: BTreeMap<String, Tensor>,
    second: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Restores a saved state; every name needs both moments of equal shape.
    pub fn from_parts(step: u64, first: BTreeMap<String, Tensor>, second: BTreeMap<String, Tensor>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::Contract("moment maps differ in size".into()));
        }
        for (k, m) in &first {
            match second.get(k) {
                Some(v) if v.shape() == m.shape() => {}
                _ => return Err(Error::Contract(format!("moment mismatch for `{k}`"))),
            }
        }
        Ok(Self { step, first, second })
    }

    /// `(name, first moment, second moment)` in name order.
    pub fn moments(&self) -> impl Iterator<Item = (&str, &Tensor, &Tensor)> {
        self.first.iter().map(|(k, m)| (k.as_str(), m, &self.second[k]))
    }

    /// One bias-corrected Adam update of every listed parameter.
    pub fn step(
        &mut self,
        params: Vec<(String, &mut Tensor)>,
        grads: &BTreeMap<String, Tensor>,
        lr: f64,
        hp: AdamParams,
    ) -> Result<()> {
        for (name, p) in &params {
            let g = grads.get(name).ok_or_else(|| Error::Contract(format!("no gradient for `{name}`")))?;
            if g.shape() != p.shape() {
                return Err(Error::Shape {
                    node: name.clone(),
                    detail: format!("gradient {:?} vs parameter {:?}", g.shape(), p.shape()),
                });
            }
            if let Some(m) = self.first.get(name) {
                if m.shape() != p.shape() {
                    return Err(Error::Shape { node: name.clone(), detail: "moment shape mismatch".into() });
                }
            }
        }
        self.step += 1;
        let t = self.step.min(i32::MAX as u64) as i32;
        let c1 = 1.0 - math::powi(hp.beta1, t);
        let c2 = 1.0 - math::powi(hp.beta2, t);
        for (name, p) in params {
            let g = &grads[&name];
            let m = self.first.entry(name.clone()).or_insert_with(|| Tensor::zeros(p.shape()));
            let v = self.second.entry(name).or_insert_with(|| Tensor::zeros(p.shape()));
            let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
            for i in 0..pd.len() {
                let gi = g.data()[i];
                md[i] = hp.beta1 * md[i] + (1.0 - hp.beta1) * gi;
                vd[i] = hp.beta2 * vd[i] + (1.0 - hp.beta2) * gi * gi;
                let m_hat = md[i] / c1;
                let v_hat = vd[i] / c2;
                pd[i] -= lr * m_hat / (math::sqrt(v_hat) + hp.eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(
    params: Vec<(String, &mut Tensor)>,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
    lr: f64,
    hp: AdamParams,
) -> Result<()> {
    state.step(params, grads, lr, hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn grads(v: f64) -> BTreeMap<String, Tensor> {
        let mut g = BTreeMap::new();
        g.insert("p".to_string(), Tensor::scalar(v).unwrap());
        g
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Tensor::scalar(1.0).unwrap();
        let mut st = AdamState::new();
        st.step(vec![("p".to_string(), &mut p)], &grads(1.0), 1e-4, AdamParams::default()).unwrap();
        // m_hat = 1, v_hat = 1, update = lr / (1 + eps)
        let expected = 1.0 - 1e-4 / (1.0 + 1e-8);
        assert!((p.item().unwrap() - expected).abs() < 1e-15);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_never_moves() {
        let mut p = Tensor::scalar(0.75).unwrap();
        let mut st = AdamState::new();
        for _ in 0..100 {
            st.step(vec![("p".to_string(), &mut p)], &grads(0.0), 1e-2, AdamParams::default()).unwrap();
        }
        assert_eq!(p.item(), Some(0.75));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let mut st = AdamState::new();
        let err = st.step(vec![("p".to_string(), &mut p)], &grads(1.0), 1e-3, AdamParams::default());
        assert!(matches!(err, Err(Error::Shape { .. })));
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn deterministic_runs() {
        let run = || {
            let mut p = Tensor::vector(vec![0.3, -1.2, 2.0]).unwrap();
            let mut st = AdamState::new();
            for k in 0..100 {
                let g: Vec<f64> = p.data().iter().map(|x| 2.0 * x + 0.01 * k as f64).collect();
                let mut gm = BTreeMap::new();
                gm.insert("p".to_string(), Tensor::vector(g).unwrap());
                st.step(vec![("p".to_string(), &mut p)], &gm, 1e-2, AdamParams::default()).unwrap();
            }
            p
        };
        assert_eq!(run().data(), run().data());
    }
}
