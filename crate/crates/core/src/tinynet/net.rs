use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::NetError;

/// A real-valued trainable tensor with its gradient and SGD velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Whether weight decay applies (off for batch-norm scale and shift).
    pub decay: bool,
}

impl Param {
    pub fn new(value: Vec<f64>, decay: bool) -> Self {
        let n = value.len();
        Self {
            value,
            grad: vec![0.0; n],
            velocity: vec![0.0; n],
            decay,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Fully connected layer with real weights, stored output-major (`out x in`).
#[derive(Debug, Clone)]
pub struct RealLinearLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Param,
    pub bias: Option<Param>,
}

impl RealLinearLayer {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, with_bias: bool, rng: &mut R) -> Self {
        let std = (2.0 / in_dim.max(1) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("finite std");
        let weights = (0..in_dim * out_dim).map(|_| normal.sample(rng)).collect();
        Self {
            in_dim,
            out_dim,
            weights: Param::new(weights, true),
            bias: with_bias.then(|| Param::new(vec![0.0; out_dim], true)),
        }
    }
}

/// Fully connected layer whose weights are exactly -1 or +1.
///
/// The weights are owned by a binary optimizer and copied in with
/// [`BinaryLinearLayer::set_theta`]; the layer only produces `grad_theta`.
#[derive(Debug, Clone)]
pub struct BinaryLinearLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    theta: Vec<i8>,
    pub grad_theta: Vec<f64>,
}

impl BinaryLinearLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            theta: vec![1; in_dim * out_dim],
            grad_theta: vec![0.0; in_dim * out_dim],
        }
    }

    pub fn theta(&self) -> &[i8] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn set_theta(&mut self, theta: &[i8]) -> Result<(), NetError> {
        if theta.len() != self.theta.len() {
            return Err(NetError::DimensionMismatch {
                what: "binary weights",
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        if let Some(index) = theta.iter().position(|&t| t != 1 && t != -1) {
            return Err(NetError::NotBinary { index, value: theta[index] });
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub dim: usize,
    pub scale: Param,
    pub shift: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

impl BatchNormLayer {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            scale: Param::new(vec![1.0; dim], false),
            shift: Param::new(vec![0.0; dim], false),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
        }
    }
}

/// Hidden-layer nonlinearity.
///
/// Training uses `Sign` with the clipped straight-through estimator in the
/// backward pass. `HardTanh` is `clamp(x, -1, 1)`, whose exact derivative is
/// that same estimator; it exists so the hand-written backward pass can be
/// checked against finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sign,
    HardTanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            // exact zero maps to +1
            Activation::Sign => {
                if x < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Activation::HardTanh => x.clamp(-1.0, 1.0),
        }
    }
}

/// Clipped straight-through mask `1{|x| <= 1}`.
pub fn ste_mask(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm.
    Train,
    /// Running statistics in batch norm.
    Eval,
}

#[derive(Debug, Clone)]
enum Linear {
    Real(RealLinearLayer),
    Binary(BinaryLinearLayer),
}

impl Linear {
    fn dims(&self) -> (usize, usize) {
        match self {
            Linear::Real(l) => (l.in_dim, l.out_dim),
            Linear::Binary(l) => (l.in_dim, l.out_dim),
        }
    }
}

#[derive(Debug, Clone)]
struct HiddenCache {
    input: Vec<f64>,
    xhat: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
    inv_std: Vec<f64>,
    pre_act: Vec<f64>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    pub mode: Mode,
    hidden: Vec<HiddenCache>,
    head_input: Vec<f64>,
    pub logits: Vec<f64>,
}

impl ForwardCache {
    /// Post-batch-norm, pre-activation values of hidden layer `layer`.
    pub fn pre_activation(&self, layer: usize) -> &[f64] {
        &self.hidden[layer].pre_act
    }

    /// Normalized (before scale and shift) values of hidden layer `layer`.
    pub fn normalized(&self, layer: usize) -> &[f64] {
        &self.hidden[layer].xhat
    }
}

/// Multilayer perceptron: `[linear -> batchnorm -> sign] * depth -> linear`.
///
/// The first hidden linear layer is real-valued, the remaining hidden linear
/// layers are binary, and the output head is real-valued with a bias.
#[derive(Debug, Clone)]
pub struct Net {
    in_dim: usize,
    n_classes: usize,
    linears: Vec<Linear>,
    norms: Vec<BatchNormLayer>,
    head: RealLinearLayer,
    pub activation: Activation,
}

fn matmul_wt(x: &[f64], batch: usize, in_dim: usize, out_dim: usize, w: impl Fn(usize) -> f64, out: &mut [f64]) {
    for b in 0..batch {
        let xr = &x[b * in_dim..(b + 1) * in_dim];
        for o in 0..out_dim {
            let base = o * in_dim;
            let mut acc = 0.0;
            for (i, xv) in xr.iter().enumerate() {
                acc += xv * w(base + i);
            }
            out[b * out_dim + o] = acc;
        }
    }
}

impl Net {
    pub fn new<R: Rng>(in_dim: usize, hidden: &[usize], n_classes: usize, rng: &mut R) -> Self {
        let mut linears = Vec::with_capacity(hidden.len());
        let mut norms = Vec::with_capacity(hidden.len());
        let mut prev = in_dim;
        for (i, &h) in hidden.iter().enumerate() {
            linears.push(if i == 0 {
                Linear::Real(RealLinearLayer::new(prev, h, false, rng))
            } else {
                Linear::Binary(BinaryLinearLayer::new(prev, h))
            });
            norms.push(BatchNormLayer::new(h));
            prev = h;
        }
        Self {
            in_dim,
            n_classes,
            linears,
            norms,
            head: RealLinearLayer::new(prev, n_classes, true, rng),
            activation: Activation::Sign,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn depth(&self) -> usize {
        self.linears.len()
    }

    pub fn binary_layers(&self) -> impl Iterator<Item = &BinaryLinearLayer> {
        self.linears.iter().filter_map(|l| match l {
            Linear::Binary(b) => Some(b),
            Linear::Real(_) => None,
        })
    }

    pub fn binary_layers_mut(&mut self) -> impl Iterator<Item = &mut BinaryLinearLayer> {
        self.linears.iter_mut().filter_map(|l| match l {
            Linear::Binary(b) => Some(b),
            Linear::Real(_) => None,
        })
    }

    pub fn real_layers_mut(&mut self) -> impl Iterator<Item = &mut RealLinearLayer> {
        self.linears
            .iter_mut()
            .filter_map(|l| match l {
                Linear::Real(r) => Some(r),
                Linear::Binary(_) => None,
            })
            .chain(std::iter::once(&mut self.head))
    }

    pub fn head_mut(&mut self) -> &mut RealLinearLayer {
        &mut self.head
    }

    pub fn norms_mut(&mut self) -> &mut [BatchNormLayer] {
        &mut self.norms
    }

    /// All real-valued parameters, in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for (lin, bn) in self.linears.iter_mut().zip(self.norms.iter_mut()) {
            if let Linear::Real(r) = lin {
                out.push(&mut r.weights);
                if let Some(b) = r.bias.as_mut() {
                    out.push(b);
                }
            }
            out.push(&mut bn.scale);
            out.push(&mut bn.shift);
        }
        out.push(&mut self.head.weights);
        if let Some(b) = self.head.bias.as_mut() {
            out.push(b);
        }
        out
    }

    pub fn real_param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.len()).sum()
    }

    pub fn forward(&self, x: &[f64], batch: usize, mode: Mode) -> Result<ForwardCache, NetError> {
        if batch == 0 || x.len() != batch * self.in_dim {
            return Err(NetError::DimensionMismatch {
                what: "input batch",
                expected: batch * self.in_dim,
                got: x.len(),
            });
        }
        let mut hidden = Vec::with_capacity(self.linears.len());
        let mut act = x.to_vec();
        for (lin, bn) in self.linears.iter().zip(&self.norms) {
            let (in_dim, out_dim) = lin.dims();
            let mut y = vec![0.0; batch * out_dim];
            match lin {
                Linear::Real(r) => matmul_wt(&act, batch, in_dim, out_dim, |k| r.weights.value[k], &mut y),
                Linear::Binary(l) => matmul_wt(&act, batch, in_dim, out_dim, |k| f64::from(l.theta[k]), &mut y),
            }

            let (mean, var) = match mode {
                Mode::Train => {
                    let mut mean = vec![0.0; out_dim];
                    let mut var = vec![0.0; out_dim];
                    for b in 0..batch {
                        for f in 0..out_dim {
                            mean[f] += y[b * out_dim + f];
                        }
                    }
                    mean.iter_mut().for_each(|m| *m /= batch as f64);
                    for b in 0..batch {
                        for f in 0..out_dim {
                            let d = y[b * out_dim + f] - mean[f];
                            var[f] += d * d;
                        }
                    }
                    var.iter_mut().for_each(|v| *v /= batch as f64);
                    (mean, var)
                }
                Mode::Eval => (bn.running_mean.clone(), bn.running_var.clone()),
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
            let mut xhat = y;
            let mut pre_act = vec![0.0; batch * out_dim];
            let mut next = vec![0.0; batch * out_dim];
            for b in 0..batch {
                for f in 0..out_dim {
                    let k = b * out_dim + f;
                    xhat[k] = (xhat[k] - mean[f]) * inv_std[f];
                    pre_act[k] = bn.scale.value[f] * xhat[k] + bn.shift.value[f];
                    next[k] = self.activation.apply(pre_act[k]);
                }
            }
            hidden.push(HiddenCache {
                input: std::mem::replace(&mut act, next),
                xhat,
                mean,
                var,
                inv_std,
                pre_act,
            });
        }

        let head = &self.head;
        let mut logits = vec![0.0; batch * head.out_dim];
        matmul_wt(&act, batch, head.in_dim, head.out_dim, |k| head.weights.value[k], &mut logits);
        if let Some(bias) = &head.bias {
            for b in 0..batch {
                for (o, bv) in bias.value.iter().enumerate() {
                    logits[b * head.out_dim + o] += bv;
                }
            }
        }
        Ok(ForwardCache {
            batch,
            mode,
            hidden,
            head_input: act,
            logits,
        })
    }

    /// Folds the batch statistics of a training-mode pass into the running statistics.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if cache.mode != Mode::Train {
            return;
        }
        let n = cache.batch as f64;
        let unbias = if cache.batch > 1 { n / (n - 1.0) } else { 1.0 };
        for (bn, hc) in self.norms.iter_mut().zip(&cache.hidden) {
            for f in 0..bn.dim {
                bn.running_mean[f] = (1.0 - bn.momentum) * bn.running_mean[f] + bn.momentum * hc.mean[f];
                bn.running_var[f] = (1.0 - bn.momentum) * bn.running_var[f] + bn.momentum * hc.var[f] * unbias;
            }
        }
    }

    /// Mean softmax cross-entropy; also returns `(softmax - onehot) / batch`.
    pub fn loss_and_logit_grad(&self, logits: &[f64], labels: &[usize]) -> Result<(f64, Vec<f64>), NetError> {
        let k = self.n_classes;
        let batch = labels.len();
        if logits.len() != batch * k {
            return Err(NetError::DimensionMismatch {
                what: "labels",
                expected: logits.len() / k.max(1),
                got: batch,
            });
        }
        let mut grad = vec![0.0; logits.len()];
        let mut loss = 0.0;
        for (b, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(NetError::LabelOutOfRange { label, classes: k });
            }
            let row = &logits[b * k..(b + 1) * k];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
            let log_sum = max + sum.ln();
            loss += log_sum - row[label];
            for c in 0..k {
                let p = (row[c] - log_sum).exp();
                grad[b * k + c] = (p - if c == label { 1.0 } else { 0.0 }) / batch as f64;
            }
        }
        Ok((loss / batch as f64, grad))
    }

    pub fn loss(&self, x: &[f64], labels: &[usize], mode: Mode) -> Result<f64, NetError> {
        let cache = self.forward(x, labels.len(), mode)?;
        Ok(self.loss_and_logit_grad(&cache.logits, labels)?.0)
    }

    /// Backpropagates softmax cross-entropy from a training-mode cache,
    /// overwriting every parameter gradient and every `grad_theta`.
    pub fn backward(&mut self, cache: &ForwardCache, labels: &[usize]) -> Result<f64, NetError> {
        if cache.mode != Mode::Train {
            return Err(NetError::EvalCache);
        }
        if cache.hidden.len() != self.linears.len() || labels.len() != cache.batch {
            return Err(NetError::CacheMismatch);
        }
        let batch = cache.batch;
        let (loss, dlogits) = self.loss_and_logit_grad(&cache.logits, labels)?;

        let head = &mut self.head;
        let (hin, hout) = (head.in_dim, head.out_dim);
        head.weights.grad.fill(0.0);
        let mut d_act = vec![0.0; batch * hin];
        for b in 0..batch {
            let xr = &cache.head_input[b * hin..(b + 1) * hin];
            for o in 0..hout {
                let d = dlogits[b * hout + o];
                let gw = &mut head.weights.grad[o * hin..(o + 1) * hin];
                let w = &head.weights.value[o * hin..(o + 1) * hin];
                for i in 0..hin {
                    gw[i] += d * xr[i];
                    d_act[b * hin + i] += d * w[i];
                }
            }
        }
        if let Some(bias) = head.bias.as_mut() {
            bias.grad.fill(0.0);
            for b in 0..batch {
                for o in 0..hout {
                    bias.grad[o] += dlogits[b * hout + o];
                }
            }
        }

        for layer in (0..self.linears.len()).rev() {
            let hc = &cache.hidden[layer];
            let bn = &mut self.norms[layer];
            let dim = bn.dim;
            // straight-through: gradient only where |pre-activation| <= 1
            let dz: Vec<f64> = d_act.iter().zip(&hc.pre_act).map(|(d, z)| d * ste_mask(*z)).collect();

            bn.scale.grad.fill(0.0);
            bn.shift.grad.fill(0.0);
            let mut sum_dxhat = vec![0.0; dim];
            let mut sum_dxhat_xhat = vec![0.0; dim];
            for b in 0..batch {
                for f in 0..dim {
                    let k = b * dim + f;
                    bn.scale.grad[f] += dz[k] * hc.xhat[k];
                    bn.shift.grad[f] += dz[k];
                    let dxhat = dz[k] * bn.scale.value[f];
                    sum_dxhat[f] += dxhat;
                    sum_dxhat_xhat[f] += dxhat * hc.xhat[k];
                }
            }
            let n = batch as f64;
            let mut dy = vec![0.0; batch * dim];
            for b in 0..batch {
                for f in 0..dim {
                    let k = b * dim + f;
                    let dxhat = dz[k] * bn.scale.value[f];
                    dy[k] = hc.inv_std[f] / n * (n * dxhat - sum_dxhat[f] - hc.xhat[k] * sum_dxhat_xhat[f]);
                }
            }

            let (in_dim, out_dim) = self.linears[layer].dims();
            let need_dx = layer > 0;
            let mut dx = if need_dx { vec![0.0; batch * in_dim] } else { Vec::new() };
            match &mut self.linears[layer] {
                Linear::Real(r) => {
                    r.weights.grad.fill(0.0);
                    for b in 0..batch {
                        let xr = &hc.input[b * in_dim..(b + 1) * in_dim];
                        for o in 0..out_dim {
                            let d = dy[b * out_dim + o];
                            let gw = &mut r.weights.grad[o * in_dim..(o + 1) * in_dim];
                            for i in 0..in_dim {
                                gw[i] += d * xr[i];
                            }
                            if need_dx {
                                let w = &r.weights.value[o * in_dim..(o + 1) * in_dim];
                                for i in 0..in_dim {
                                    dx[b * in_dim + i] += d * w[i];
                                }
                            }
                        }
                    }
                }
                Linear::Binary(l) => {
                    l.grad_theta.fill(0.0);
                    for b in 0..batch {
                        let xr = &hc.input[b * in_dim..(b + 1) * in_dim];
                        for o in 0..out_dim {
                            let d = dy[b * out_dim + o];
                            let gw = &mut l.grad_theta[o * in_dim..(o + 1) * in_dim];
                            for i in 0..in_dim {
                                gw[i] += d * xr[i];
                            }
                            if need_dx {
                                let w = &l.theta[o * in_dim..(o + 1) * in_dim];
                                for i in 0..in_dim {
                                    dx[b * in_dim + i] += d * f64::from(w[i]);
                                }
                            }
                        }
                    }
                }
            }
            d_act = dx;
        }
        Ok(loss)
    }

    /// Class predictions in evaluation mode.
    pub fn predict(&self, x: &[f64], batch: usize) -> Result<Vec<usize>, NetError> {
        let cache = self.forward(x, batch, Mode::Eval)?;
        let k = self.n_classes;
        Ok(cache
            .logits
            .chunks(k)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                    .0
            })
            .collect())
    }
}
