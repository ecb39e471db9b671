//! Double-double reference evaluation of the flow losses. Central
//! differences taken in this arithmetic have rounding noise around 1e-30,
//! so they can check f64 gradients coordinate by coordinate, including the
//! ones that are many orders of magnitude below the loss.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cif_core::flow::{FlowModel, Permutation};
use cif_core::tensor::Tensor;
use twofloat::TwoFloat as T;

type Rows = Vec<Vec<T>>;

/// `exp` to full double-double accuracy: halve into `|r| < 2^-10`, sum the Taylor
/// series, square back.
fn exp(x: T) -> T {
    let mut r = x;
    let mut halvings = 0;
    while r.hi().abs() > 1.0 / 1024.0 {
        r /= 2.0;
        halvings += 1;
    }
    let mut term = T::from(1.0);
    let mut sum = T::from(1.0);
    for n in 1..=16 {
        term = term * r / n as f64;
        sum += term;
    }
    for _ in 0..halvings {
        sum = sum * sum;
    }
    sum
}

/// Quotient refined from the leading-word estimate; the library's
/// double-double division is only good to about 1e-17.
fn div(a: T, b: T) -> T {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    T::from(q1) + q2 + r.hi() / b.hi()
}

fn tanh(x: T) -> T {
    if x.hi() < 0.0 {
        return -tanh(-x);
    }
    let t = exp(x * -2.0);
    div(T::from(1.0) - t, T::from(1.0) + t)
}

#[derive(Clone)]
pub struct Params(BTreeMap<String, (Vec<usize>, Vec<T>)>);

impl Params {
    pub fn of(models: &[&FlowModel]) -> Self {
        let mut map = BTreeMap::new();
        for m in models {
            for (name, t) in m.tensors() {
                map.insert(name, (t.shape().to_vec(), t.data().iter().map(|&v| T::from(v)).collect()));
            }
        }
        Params(map)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.keys().cloned().collect()
    }

    pub fn len_of(&self, name: &str) -> usize {
        self.0[name].1.len()
    }

    fn nudge(&mut self, name: &str, c: usize, delta: f64) {
        let v = &mut self.0.get_mut(name).unwrap().1[c];
        *v += delta;
    }

    fn get(&self, name: &str) -> Option<&(Vec<usize>, Vec<T>)> {
        self.0.get(name)
    }
}

fn times(rows: &Rows, w: &(Vec<usize>, Vec<T>)) -> Rows {
    let (k, n) = (w.0[0], w.0[1]);
    rows.iter()
        .map(|r| {
            assert_eq!(r.len(), k);
            (0..n)
                .map(|j| {
                    let mut acc = T::from(0.0);
                    for (p, &v) in r.iter().enumerate() {
                        acc += v * w.1[p * n + j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn plus(a: &Rows, b: &Rows) -> Rows {
    a.iter().zip(b.iter().cycle()).map(|(r, s)| r.iter().zip(s).map(|(&u, &v)| u + v).collect()).collect()
}

fn bias(b: &(Vec<usize>, Vec<T>)) -> Rows {
    vec![b.1.clone()]
}

fn tanh_rows(a: &Rows) -> Rows {
    a.iter().map(|r| r.iter().map(|&v| tanh(v)).collect()).collect()
}

/// Two residual stages and a linear head on the concatenation `[x, e]`.
fn net(p: &Params, prefix: &str, x: &Rows, e: Option<&Rows>) -> Rows {
    let w = |n: &str| p.get(&format!("{prefix}.{n}")).unwrap_or_else(|| panic!("{prefix}.{n}"));
    let cond = |n: &str| match (e, p.get(&format!("{prefix}.{n}"))) {
        (Some(e), Some(t)) => Some(times(e, t)),
        _ => None,
    };
    let mut pre1 = plus(&times(x, w("s1_wx")), &bias(w("s1_b")));
    if let Some(c) = cond("s1_we") {
        pre1 = plus(&pre1, &c);
    }
    let r1 = plus(&times(&tanh_rows(&pre1), w("s1_w2")), &bias(w("s1_b2")));
    let mut skip = times(x, w("skip_x"));
    if let Some(c) = cond("skip_e") {
        skip = plus(&skip, &c);
    }
    let h1 = plus(&r1, &skip);
    let pre2 = plus(&times(&h1, w("s2_w1")), &bias(w("s2_b1")));
    let h2 = plus(&h1, &plus(&times(&tanh_rows(&pre2), w("s2_w2")), &bias(w("s2_b2"))));
    plus(&times(&h2, w("head_w")), &bias(w("head_b")))
}

fn permute(perm: Permutation, v: &[T]) -> Vec<T> {
    let d = v.len();
    (0..d)
        .map(|i| match perm {
            Permutation::ShiftRight => v[(i + d - 1) % d],
            Permutation::SwapHalves => v[(i + d / 2) % d],
        })
        .collect()
}

/// Forward flow on rows; returns the outputs and the log-det summed over rows.
fn flow(p: &Params, model: &FlowModel, x: Rows, e: Option<&Rows>) -> (Rows, T) {
    let arch = model.arch();
    let (d, s) = (arch.split, arch.scale_clamp);
    let mut cur = x;
    let mut ld = T::from(0.0);
    for k in 0..arch.n_blocks() {
        let prefix = format!("{}.b{k:02}", model.prefix());
        let fixed: Rows = cur.iter().map(|r| r[..d].to_vec()).collect();
        let raw = net(p, &format!("{prefix}.m"), &fixed, e);
        let shift = net(p, &format!("{prefix}.a"), &fixed, e);
        cur = cur
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut h = r[..d].to_vec();
                for j in d..r.len() {
                    let m = tanh(raw[i][j - d] / s) * s;
                    ld += m;
                    h.push(r[j] * exp(m) + shift[i][j - d]);
                }
                permute(arch.permutation, &h)
            })
            .collect();
    }
    (cur, ld)
}

fn half_sq(rows: &Rows) -> T {
    let mut acc = T::from(0.0);
    for r in rows {
        for &v in r {
            acc += v * v;
        }
    }
    acc * 0.5
}

fn rows_of(t: &Tensor) -> Rows {
    let d = *t.shape().last().unwrap();
    t.data().chunks(d).map(|r| r.iter().map(|&v| T::from(v)).collect()).collect()
}

/// Joint per-cloud loss without its parameter-free constants.
pub fn joint_loss(p: &Params, f: &FlowModel, g: &FlowModel, x: &Tensor, w: &Tensor, g_weight: f64) -> T {
    let (e, ld_g) = flow(p, g, rows_of(w), None);
    let (z, ld_f) = flow(p, f, rows_of(x), Some(&e));
    let nll_g = half_sq(&e) - ld_g;
    half_sq(&z) - ld_f + nll_g * g_weight
}

/// Point-flow NLL of `x` under a fixed embedding row, without constants.
pub fn point_loss(p: &Params, f: &FlowModel, x: &Tensor, e: &Tensor) -> T {
    let (z, ld) = flow(p, f, rows_of(x), Some(&rows_of(e)));
    half_sq(&z) - ld
}

pub struct Worst {
    pub rel: f64,
    pub coord: String,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Worst relative error `|a - n| / max(|a|, |n|, 1e-12)` between analytic
/// gradients and double-double central differences of `loss`.
pub fn check_gradients(
    p: &Params,
    analytic: &BTreeMap<String, Tensor>,
    eps: f64,
    loss: impl Fn(&Params) -> T,
) -> Worst {
    let mut worst = Worst { rel: 0.0, coord: String::new(), analytic: 0.0, numeric: 0.0, checked: 0 };
    let mut q = p.clone();
    for name in p.names() {
        let grad = &analytic[&name];
        for c in 0..p.len_of(&name) {
            q.nudge(&name, c, eps);
            let lp = loss(&q);
            q.nudge(&name, c, -2.0 * eps);
            let lm = loss(&q);
            q.nudge(&name, c, eps);
            let numeric = f64::from((lp - lm) / (2.0 * eps));
            let a = grad.data()[c];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            worst.checked += 1;
            if rel > worst.rel {
                worst = Worst { rel, coord: format!("{name}[{c}]"), analytic: a, numeric, checked: worst.checked };
            }
        }
    }
    worst
}
