//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as a node appended to a tape. Parents
//! always precede children, so walking the tape backwards from the loss is a
//! valid reverse topological order: each node is visited once and gradients
//! from fan-out are summed before being propagated further.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::tensor::{gemm, gemm_strided, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(u64);

static NEXT_PARAM: AtomicU64 = AtomicU64::new(0);

impl ParamId {
    fn fresh() -> Self {
        Self(NEXT_PARAM.fetch_add(1, Ordering::Relaxed))
    }
}

/// A trainable tensor together with the gradient from the most recent
/// backward pass.
#[derive(Debug)]
pub struct Parameter {
    id: ParamId,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Clone for Parameter {
    fn clone(&self) -> Self {
        // A clone is a distinct parameter.
        Self {
            id: ParamId::fresh(),
            value: self.value.clone(),
            grad: self.grad.clone(),
        }
    }
}

impl Parameter {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            id: ParamId::fresh(),
            value,
            grad,
        }
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub(crate) fn value_and_grad(&mut self) -> (&mut [f64], &[f64]) {
        (self.value.data_mut(), self.grad.data())
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Square(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Sum(Var),
    Mean(Var),
    Reshape(Var),
    Transpose(Var),
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        // Per column: true when the batch variance (not a floor or running
        // estimate) produced `inv_std`, so the gradient flows through it.
        through_var: Vec<bool>,
        batch_stats: bool,
    },
    Dropout(Var, Vec<f64>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    grads: Vec<Option<Vec<f64>>>,
}

fn dim_err(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        expected: expected.into(),
        got: got.into(),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last backward pass with respect to `v`, if `v` was
    /// reachable from the loss.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Untracked input: no gradient is accumulated for it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Tracked leaf that is not a model parameter (e.g. an input whose
    /// gradient is wanted).
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a parameter as a tracked leaf. Registering the same
    /// parameter twice returns the same node.
    pub fn param(&mut self, p: &Parameter) -> Var {
        if let Some(&v) = self.params.get(&p.id) {
            return v;
        }
        let v = self.push(p.value.clone(), Op::Leaf, true);
        self.params.insert(p.id, v);
        v
    }

    /// Registers a parameter as a constant: used when a network participates
    /// in a forward pass but must not receive gradients.
    pub fn frozen_param(&mut self, p: &Parameter) -> Var {
        self.push(p.value.clone(), Op::Leaf, false)
    }

    /// Moves gradients of the last backward pass into `params`. Parameters
    /// absent from this graph (or unreachable from the loss) get zero.
    pub fn write_grads<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Parameter>) {
        for p in params {
            let taken = self
                .params
                .get(&p.id)
                .and_then(|&v| self.grads.get_mut(v.0))
                .and_then(Option::take);
            match taken {
                Some(g) => p.grad = Tensor::new(p.grad.shape().to_vec(), g).expect("gradient shape"),
                None => p.zero_grad(),
            }
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2()?;
        let (k2, n) = self.value(b).dims2()?;
        if k != k2 {
            return Err(dim_err(
                "matmul",
                format!("inner extent {k}"),
                format!("{k2}"),
            ));
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, self.value(a).data(), self.value(b).data(), &mut out);
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), tracked))
    }

    /// Adds a `[c]` bias to every row of an `[n, c]` tensor.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (n, c) = self.value(x).dims2()?;
        if self.value(bias).len() != c {
            return Err(dim_err(
                "add_bias",
                format!("{c} bias entries"),
                format!("{}", self.value(bias).len()),
            ));
        }
        let b = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_exact_mut(c) {
            row.iter_mut().zip(b).for_each(|(o, bv)| *o += bv);
        }
        let tracked = self.tracked(x) || self.tracked(bias);
        Ok(self.push(Tensor::new(vec![n, c], out)?, Op::AddBias(x, bias), tracked))
    }

    fn zip_same(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(dim_err(
                name,
                format!("{:?}", va.shape()),
                format!("{:?}", vb.shape()),
            ));
        }
        let out: Vec<f64> = va.data().iter().zip(vb.data()).map(|(x, y)| f(*x, *y)).collect();
        let shape = va.shape().to_vec();
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(Tensor::new(shape, out)?, op, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let v = self.value(x);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|&e| f(e)).collect())
            .expect("elementwise map preserves shape");
        let tracked = self.tracked(x);
        self.push(out, op, tracked)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.map(x, |e| e * s, Op::Scale(x, s))
    }

    pub fn offset(&mut self, x: Var, c: f64) -> Var {
        self.map(x, |e| e + c, Op::Offset(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.map(x, |e| e * e, Op::Square(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |e| e.max(0.0), Op::Relu(x))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        self.map(x, |e| if e > 0.0 { e } else { slope * e }, Op::LeakyRelu(x, slope))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let tracked = self.tracked(x);
        self.push(Tensor::scalar(s), Op::Sum(x), tracked)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let s = v.data().iter().sum::<f64>() / v.len() as f64;
        let tracked = self.tracked(x);
        self.push(Tensor::scalar(s), Op::Mean(x), tracked)
    }

    /// Mean squared error against a constant target of the same shape.
    pub fn mse(&mut self, pred: Var, target: &[f64]) -> Result<Var> {
        let shape = self.value(pred).shape().to_vec();
        let t = self.constant(Tensor::new(shape, target.to_vec())?);
        let diff = self.sub(pred, t)?;
        let sq = self.square(diff);
        Ok(self.mean(sq))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshape(shape)?;
        let tracked = self.tracked(x);
        Ok(self.push(out, Op::Reshape(x), tracked))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let (r, c) = self.value(x).dims2()?;
        let src = self.value(x).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let tracked = self.tracked(x);
        Ok(self.push(Tensor::new(vec![c, r], out)?, Op::Transpose(x), tracked))
    }

    /// Stride-1 cross-correlation with zero "same" padding.
    /// `x: [c_in, L]`, `w: [c_out, c_in, K]` with odd `K`, `b: [c_out]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (c_in, len) = self.value(x).dims2()?;
        let ws = self.value(w).shape().to_vec();
        let [c_out, wc_in, k] = ws[..] else {
            return Err(dim_err("conv1d", "rank-3 kernel", format!("{ws:?}")));
        };
        if wc_in != c_in {
            return Err(dim_err(
                "conv1d",
                format!("{c_in} kernel input channels"),
                format!("{wc_in}"),
            ));
        }
        if k % 2 == 0 {
            return Err(Error::Config(format!(
                "conv1d kernel width must be odd for same padding, got {k}"
            )));
        }
        if self.value(b).len() != c_out {
            return Err(dim_err(
                "conv1d",
                format!("{c_out} bias entries"),
                format!("{}", self.value(b).len()),
            ));
        }
        let pad = k / 2;
        let (xd, wd, bd) = (self.value(x).data(), self.value(w).data(), self.value(b).data());
        let mut out = vec![0.0; c_out * len];
        for o in 0..c_out {
            let row = &mut out[o * len..(o + 1) * len];
            row.fill(bd[o]);
            for c in 0..c_in {
                let xrow = &xd[c * len..(c + 1) * len];
                for q in 0..k {
                    let wv = wd[(o * c_in + c) * k + q];
                    // out[t] += wv * x[t + q - pad] over valid t
                    let lo = pad.saturating_sub(q);
                    let hi = (len + pad).saturating_sub(q).min(len);
                    for t in lo..hi {
                        row[t] += wv * xrow[t + q - pad];
                    }
                }
            }
        }
        let tracked = self.tracked(x) || self.tracked(w) || self.tracked(b);
        Ok(self.push(
            Tensor::new(vec![c_out, len], out)?,
            Op::Conv1d { x, w, b },
            tracked,
        ))
    }

    /// Column-wise normalization of `x: [n, c]`.
    ///
    /// With `stats = None` the batch mean and (biased) variance are used and
    /// returned so the caller can update running statistics. With
    /// `stats = Some((mean, var))` those are used as constants.
    pub fn batchnorm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        stats: Option<(&[f64], &[f64])>,
        var_floor: f64,
    ) -> Result<(Var, Vec<f64>, Vec<f64>)> {
        let (n, c) = self.value(x).dims2()?;
        if self.value(gamma).len() != c || self.value(beta).len() != c {
            return Err(dim_err("batchnorm", format!("{c} affine entries"), "mismatch"));
        }
        let xd = self.value(x).data();
        let (mean, var, batch_stats) = match stats {
            Some((m, v)) => (m.to_vec(), v.to_vec(), false),
            None => {
                if n < 2 {
                    return Err(Error::DegenerateBatch(n));
                }
                let mut mean = vec![0.0; c];
                for row in xd.chunks_exact(c) {
                    mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; c];
                for row in xd.chunks_exact(c) {
                    for j in 0..c {
                        let d = row[j] - mean[j];
                        var[j] += d * d;
                    }
                }
                var.iter_mut().for_each(|v| *v /= n as f64);
                (mean, var, true)
            }
        };
        let through_var: Vec<bool> = var.iter().map(|&v| batch_stats && v > var_floor).collect();
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / v.max(var_floor).sqrt()).collect();
        let (g, bt) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; n * c];
        let mut out = vec![0.0; n * c];
        for i in 0..n {
            for j in 0..c {
                let h = (xd[i * c + j] - mean[j]) * inv_std[j];
                xhat[i * c + j] = h;
                out[i * c + j] = h * g[j] + bt[j];
            }
        }
        let tracked = self.tracked(x) || self.tracked(gamma) || self.tracked(beta);
        let v = self.push(
            Tensor::new(vec![n, c], out)?,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                through_var,
                batch_stats,
            },
            tracked,
        );
        Ok((v, mean, var))
    }

    /// Multiplies `x` elementwise by a precomputed mask (dropout keeps
    /// `1/(1-rate)` or `0` per element).
    pub fn dropout_mask(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        let v = self.value(x);
        if mask.len() != v.len() {
            return Err(dim_err("dropout", format!("{} mask entries", v.len()), format!("{}", mask.len())));
        }
        let out: Vec<f64> = v.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let shape = v.shape().to_vec();
        let tracked = self.tracked(x);
        Ok(self.push(Tensor::new(shape, out)?, Op::Dropout(x, mask), tracked))
    }

    /// Populates gradients of `loss` with respect to every tracked node.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].tracked {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().unwrap();
                let n = self.value(*b).shape()[1];
                if self.tracked(*a) {
                    let bd = self.value(*b).data();
                    accumulate_with(grads, *a, m * k, |da| {
                        // da[m,k] += g[m,n] · bᵀ
                        gemm_strided(m, n, k, g, (n as isize, 1), bd, (1, n as isize), da, 1.0);
                    });
                }
                if self.tracked(*b) {
                    let ad = self.value(*a).data();
                    accumulate_with(grads, *b, k * n, |db| {
                        // db[k,n] += aᵀ · g
                        gemm_strided(k, m, n, ad, (1, k as isize), g, (n as isize, 1), db, 1.0);
                    });
                }
            }
            Op::AddBias(x, bias) => {
                if self.tracked(*x) {
                    accumulate(grads, *x, g.iter().copied());
                }
                if self.tracked(*bias) {
                    let c = self.value(*bias).len();
                    accumulate_with(grads, *bias, c, |db| {
                        for row in g.chunks_exact(c) {
                            db.iter_mut().zip(row).for_each(|(d, v)| *d += v);
                        }
                    });
                }
            }
            Op::Add(a, b) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.iter().copied());
                }
                if self.tracked(*b) {
                    accumulate(grads, *b, g.iter().copied());
                }
            }
            Op::Sub(a, b) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.iter().copied());
                }
                if self.tracked(*b) {
                    accumulate(grads, *b, g.iter().map(|v| -v));
                }
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                if self.tracked(*a) {
                    accumulate(grads, *a, g.iter().zip(bd).map(|(gv, bv)| gv * bv));
                }
                if self.tracked(*b) {
                    accumulate(grads, *b, g.iter().zip(ad).map(|(gv, av)| gv * av));
                }
            }
            Op::Scale(x, s) => accumulate(grads, *x, g.iter().map(|v| v * s)),
            Op::Offset(x) | Op::Reshape(x) => accumulate(grads, *x, g.iter().copied()),
            Op::Square(x) => {
                let xd = self.value(*x).data();
                accumulate(grads, *x, g.iter().zip(xd).map(|(gv, xv)| 2.0 * xv * gv));
            }
            Op::Relu(x) => {
                let xd = self.value(*x).data();
                accumulate(grads, *x, g.iter().zip(xd).map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 }));
            }
            Op::LeakyRelu(x, slope) => {
                let xd = self.value(*x).data();
                accumulate(
                    grads,
                    *x,
                    g.iter().zip(xd).map(|(gv, xv)| if *xv > 0.0 { *gv } else { slope * gv }),
                );
            }
            Op::Sigmoid(x) => {
                accumulate(grads, *x, g.iter().zip(out).map(|(gv, s)| gv * s * (1.0 - s)));
            }
            Op::Sum(x) => {
                let n = self.value(*x).len();
                accumulate(grads, *x, std::iter::repeat_n(g[0], n));
            }
            Op::Mean(x) => {
                let n = self.value(*x).len();
                accumulate(grads, *x, std::iter::repeat_n(g[0] / n as f64, n));
            }
            Op::Transpose(x) => {
                let (r, c) = self.value(*x).dims2().unwrap();
                // g is [c, r]
                accumulate_with(grads, *x, r * c, |dx| {
                    for a in 0..r {
                        for b in 0..c {
                            dx[a * c + b] += g[b * r + a];
                        }
                    }
                });
            }
            Op::Conv1d { x, w, b } => self.conv1d_backward(*x, *w, *b, g, grads),
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                through_var,
                batch_stats,
            } => {
                let (n, c) = self.value(*x).dims2().unwrap();
                if self.tracked(*gamma) {
                    accumulate_with(grads, *gamma, c, |dg| {
                        for (grow, hrow) in g.chunks_exact(c).zip(xhat.chunks_exact(c)) {
                            for j in 0..c {
                                dg[j] += grow[j] * hrow[j];
                            }
                        }
                    });
                }
                if self.tracked(*beta) {
                    accumulate_with(grads, *beta, c, |db| {
                        for grow in g.chunks_exact(c) {
                            db.iter_mut().zip(grow).for_each(|(d, v)| *d += v);
                        }
                    });
                }
                if self.tracked(*x) {
                    let gam = self.value(*gamma).data();
                    let nf = n as f64;
                    let mut sum_dh = vec![0.0; c];
                    let mut sum_dh_h = vec![0.0; c];
                    if *batch_stats {
                        for i in 0..n {
                            for j in 0..c {
                                let dh = g[i * c + j] * gam[j];
                                sum_dh[j] += dh;
                                sum_dh_h[j] += dh * xhat[i * c + j];
                            }
                        }
                    }
                    accumulate_with(grads, *x, n * c, |dx| {
                        for i in 0..n {
                            for j in 0..c {
                                let dh = g[i * c + j] * gam[j];
                                let v = if !*batch_stats {
                                    dh * inv_std[j]
                                } else if through_var[j] {
                                    inv_std[j] / nf
                                        * (nf * dh - sum_dh[j] - xhat[i * c + j] * sum_dh_h[j])
                                } else {
                                    inv_std[j] * (dh - sum_dh[j] / nf)
                                };
                                dx[i * c + j] += v;
                            }
                        }
                    });
                }
            }
            Op::Dropout(x, mask) => {
                accumulate(grads, *x, g.iter().zip(mask).map(|(gv, m)| gv * m));
            }
        }
    }

    fn conv1d_backward(&self, x: Var, w: Var, b: Var, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let (c_in, len) = self.value(x).dims2().unwrap();
        let ws = self.value(w).shape();
        let (c_out, k) = (ws[0], ws[2]);
        let pad = k / 2;
        let (xd, wd) = (self.value(x).data(), self.value(w).data());
        if self.tracked(b) {
            accumulate_with(grads, b, c_out, |db| {
                for o in 0..c_out {
                    db[o] += g[o * len..(o + 1) * len].iter().sum::<f64>();
                }
            });
        }
        if self.tracked(w) {
            accumulate_with(grads, w, c_out * c_in * k, |dw| {
                for o in 0..c_out {
                    let grow = &g[o * len..(o + 1) * len];
                    for c in 0..c_in {
                        let xrow = &xd[c * len..(c + 1) * len];
                        for q in 0..k {
                            let lo = pad.saturating_sub(q);
                            let hi = (len + pad).saturating_sub(q).min(len);
                            let s: f64 = (lo..hi).map(|t| grow[t] * xrow[t + q - pad]).sum();
                            dw[(o * c_in + c) * k + q] += s;
                        }
                    }
                }
            });
        }
        if self.tracked(x) {
            accumulate_with(grads, x, c_in * len, |dx| {
                for o in 0..c_out {
                    let grow = &g[o * len..(o + 1) * len];
                    for c in 0..c_in {
                        let dxrow = &mut dx[c * len..(c + 1) * len];
                        for q in 0..k {
                            let wv = wd[(o * c_in + c) * k + q];
                            let lo = pad.saturating_sub(q);
                            let hi = (len + pad).saturating_sub(q).min(len);
                            for t in lo..hi {
                                dxrow[t + q - pad] += wv * grow[t];
                            }
                        }
                    }
                }
            });
        }
    }
}

fn accumulate_with(grads: &mut [Option<Vec<f64>>], v: Var, len: usize, f: impl FnOnce(&mut [f64])) {
    let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
    f(slot);
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, src: impl ExactSizeIterator<Item = f64>) {
    let len = src.len();
    accumulate_with(grads, v, len, |d| d.iter_mut().zip(src).for_each(|(a, b)| *a += b));
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(3.0));
        let y = g.square(x);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[6.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(0.0));
        let y = g.sigmoid(x);
        assert_eq!(g.value(y).data(), &[0.5]);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.25]);
    }

    #[test]
    fn fan_out_accumulates() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(1.5));
        let y = g.add(x, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.variable(t(&[2], &[1.0, 2.0]));
        let y = g.square(x);
        assert!(matches!(g.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn shared_parameter_registers_once() {
        let p = Parameter::new(Tensor::scalar(2.0));
        let mut g = Graph::new();
        let a = g.param(&p);
        let b = g.param(&p);
        assert_eq!(a, b);
        let y = g.mul(a, b).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(a).unwrap(), &[4.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::scalar(2.0));
        let x = g.variable(Tensor::scalar(3.0));
        let y = g.mul(c, x).unwrap();
        g.backward(y).unwrap();
        assert!(g.grad(c).is_none());
        assert_eq!(g.grad(x).unwrap(), &[2.0]);
    }

    #[test]
    fn conv1d_rejects_even_kernel() {
        let mut g = Graph::new();
        let x = g.constant(t(&[1, 3], &[0.0, 1.0, 0.0]));
        let w = g.constant(t(&[1, 1, 2], &[1.0, 1.0]));
        let b = g.constant(t(&[1], &[0.0]));
        assert!(matches!(g.conv1d(x, w, b), Err(Error::Config(_))));
    }

    #[test]
    fn batchnorm_train_needs_two_rows() {
        let mut g = Graph::new();
        let x = g.constant(t(&[1, 2], &[1.0, 2.0]));
        let gam = g.constant(t(&[2], &[1.0, 1.0]));
        let bet = g.constant(t(&[2], &[0.0, 0.0]));
        assert!(matches!(
            g.batchnorm(x, gam, bet, None, 1e-5),
            Err(Error::DegenerateBatch(1))
        ));
    }
}
