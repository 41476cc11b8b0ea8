//! Layers with hand-written forward and backward passes.
//!
//! Spatial tensors are `[batch, channels, height, width]`; one-dimensional
//! signals use `height = 1`. Dense tensors are `[batch, features]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Valid (unpadded) stride-1 convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    /// `[out, in, kh, kw]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weight: Vec<f64>,
    pub grad_bias: Vec<f64>,
    input: Option<Tensor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
    cache: Option<(Vec<f64>, Vec<f64>, Vec<usize>)>, // xhat, inv_std, shape
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxPool {
    pub size: (usize, usize),
    cache: Option<(Vec<usize>, Vec<usize>)>, // argmax, input shape
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out, in]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weight: Vec<f64>,
    pub grad_bias: Vec<f64>,
    input: Option<Tensor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dropout {
    pub rate: f64,
    mask: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv(Conv),
    Relu(Option<Vec<bool>>),
    BatchNorm(BatchNorm),
    MaxPool(MaxPool),
    Flatten(Option<Vec<usize>>),
    Dropout(Dropout),
    Dense(Dense),
}

/// Serializable description of a layer, without weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
    },
    Relu,
    BatchNorm {
        channels: usize,
    },
    MaxPool {
        size: (usize, usize),
    },
    Flatten,
    Dropout {
        rate: f64,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

fn he_uniform(rng: &mut ChaCha8Rng, fan_in: usize, n: usize) -> Vec<f64> {
    let limit = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

impl Conv {
    pub fn new(in_channels: usize, out_channels: usize, kernel: (usize, usize), rng: &mut ChaCha8Rng) -> Self {
        let fan_in = in_channels * kernel.0 * kernel.1;
        let n = out_channels * fan_in;
        Self {
            in_channels,
            out_channels,
            kernel,
            weight: he_uniform(rng, fan_in, n),
            bias: vec![0.0; out_channels],
            grad_weight: vec![0.0; n],
            grad_bias: vec![0.0; out_channels],
            input: None,
        }
    }

    pub fn output_dims(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (kh, kw) = self.kernel;
        (h >= kh && w >= kw).then(|| (h - kh + 1, w - kw + 1))
    }

    fn im2col(&self, x: &[f64], h: usize, w: usize, ho: usize, wo: usize, cols: &mut [f64]) {
        let (kh, kw) = self.kernel;
        let p = ho * wo;
        for c in 0..self.in_channels {
            for i in 0..kh {
                for j in 0..kw {
                    let row = (c * kh + i) * kw + j;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..ho {
                        let src = &x[c * h * w + (oy + i) * w + j..];
                        dst[oy * wo..(oy + 1) * wo].copy_from_slice(&src[..wo]);
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f64], h: usize, w: usize, ho: usize, wo: usize, dx: &mut [f64]) {
        let (kh, kw) = self.kernel;
        let p = ho * wo;
        for c in 0..self.in_channels {
            for i in 0..kh {
                for j in 0..kw {
                    let row = (c * kh + i) * kw + j;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..ho {
                        let base = c * h * w + (oy + i) * w + j;
                        for ox in 0..wo {
                            dx[base + ox] += src[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }

    fn forward(&mut self, x: Tensor) -> Result<Tensor> {
        let s = x.shape().to_vec();
        if s.len() != 4 || s[1] != self.in_channels {
            return Err(Error::Shape {
                context: "conv input",
                expected: vec![s.first().copied().unwrap_or(0), self.in_channels, 0, 0],
                actual: s,
            });
        }
        let (b, h, w) = (s[0], s[2], s[3]);
        let (ho, wo) = self.output_dims(h, w).ok_or_else(|| Error::Shape {
            context: "conv input smaller than kernel",
            expected: vec![self.kernel.0, self.kernel.1],
            actual: vec![h, w],
        })?;
        let k = self.in_channels * self.kernel.0 * self.kernel.1;
        let p = ho * wo;
        let mut out = Tensor::zeros(vec![b, self.out_channels, ho, wo]);
        let mut cols = vec![0.0; k * p];
        let in_per = self.in_channels * h * w;
        let out_per = self.out_channels * p;
        for n in 0..b {
            self.im2col(&x.data()[n * in_per..(n + 1) * in_per], h, w, ho, wo, &mut cols);
            let dst = &mut out.data_mut()[n * out_per..(n + 1) * out_per];
            for (o, row) in dst.chunks_exact_mut(p).enumerate() {
                row.fill(self.bias[o]);
            }
            gemm(self.out_channels, k, p, &self.weight, false, &cols, false, dst, 1.0);
        }
        self.input = Some(x);
        Ok(out)
    }

    fn backward(&mut self, dy: Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or_else(|| Error::InvalidArgument("conv backward without forward".into()))?;
        let s = x.shape().to_vec();
        let (b, h, w) = (s[0], s[2], s[3]);
        let (ho, wo) = self.output_dims(h, w).expect("checked in forward");
        let k = self.in_channels * self.kernel.0 * self.kernel.1;
        let p = ho * wo;
        let in_per = self.in_channels * h * w;
        let out_per = self.out_channels * p;
        let mut dx = Tensor::zeros(s.clone());
        let mut cols = vec![0.0; k * p];
        let mut dcols = vec![0.0; k * p];
        for n in 0..b {
            let g = &dy.data()[n * out_per..(n + 1) * out_per];
            self.im2col(&x.data()[n * in_per..(n + 1) * in_per], h, w, ho, wo, &mut cols);
            gemm(self.out_channels, p, k, g, false, &cols, true, &mut self.grad_weight, 1.0);
            for (o, row) in g.chunks_exact(p).enumerate() {
                self.grad_bias[o] += row.iter().sum::<f64>();
            }
            gemm(k, self.out_channels, p, &self.weight, true, g, false, &mut dcols, 0.0);
            self.col2im(&dcols, h, w, ho, wo, &mut dx.data_mut()[n * in_per..(n + 1) * in_per]);
        }
        Ok(dx)
    }
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            grad_gamma: vec![0.0; channels],
            grad_beta: vec![0.0; channels],
            cache: None,
        }
    }

    /// (batch, channels, spatial) view of a 2-D or 4-D input.
    fn layout(&self, s: &[usize]) -> Result<(usize, usize)> {
        let ok = (s.len() == 4 || s.len() == 2) && s[1] == self.channels;
        if !ok {
            return Err(Error::Shape {
                context: "batch-norm input",
                expected: vec![s.first().copied().unwrap_or(0), self.channels],
                actual: s.to_vec(),
            });
        }
        Ok((s[0], s.iter().skip(2).product()))
    }

    fn forward(&mut self, mut x: Tensor, mode: Mode) -> Result<Tensor> {
        let shape = x.shape().to_vec();
        let (b, sp) = self.layout(&shape)?;
        let c = self.channels;
        let count = (b * sp) as f64;
        let data = x.data_mut();
        match mode {
            Mode::Infer => {
                for ch in 0..c {
                    let inv = 1.0 / (self.running_var[ch] + BN_EPS).sqrt();
                    for n in 0..b {
                        let base = (n * c + ch) * sp;
                        for v in &mut data[base..base + sp] {
                            *v = self.gamma[ch] * (*v - self.running_mean[ch]) * inv + self.beta[ch];
                        }
                    }
                }
                self.cache = None;
            }
            Mode::Train => {
                let mut xhat = vec![0.0; data.len()];
                let mut inv_std = vec![0.0; c];
                for ch in 0..c {
                    let mut mean = 0.0;
                    for n in 0..b {
                        let base = (n * c + ch) * sp;
                        mean += data[base..base + sp].iter().sum::<f64>();
                    }
                    mean /= count;
                    let mut var = 0.0;
                    for n in 0..b {
                        let base = (n * c + ch) * sp;
                        var += data[base..base + sp].iter().map(|v| (v - mean).powi(2)).sum::<f64>();
                    }
                    var /= count;
                    let inv = 1.0 / (var + BN_EPS).sqrt();
                    inv_std[ch] = inv;
                    for n in 0..b {
                        let base = (n * c + ch) * sp;
                        for i in base..base + sp {
                            let xh = (data[i] - mean) * inv;
                            xhat[i] = xh;
                            data[i] = self.gamma[ch] * xh + self.beta[ch];
                        }
                    }
                    self.running_mean[ch] = (1.0 - BN_MOMENTUM) * self.running_mean[ch] + BN_MOMENTUM * mean;
                    self.running_var[ch] = (1.0 - BN_MOMENTUM) * self.running_var[ch] + BN_MOMENTUM * var;
                }
                self.cache = Some((xhat, inv_std, shape));
            }
        }
        Ok(x)
    }

    fn backward(&mut self, dy: Tensor) -> Result<Tensor> {
        let (xhat, inv_std, shape) = self
            .cache
            .take()
            .ok_or_else(|| Error::InvalidArgument("batch-norm backward needs a train-mode forward".into()))?;
        let (b, sp) = self.layout(&shape)?;
        let c = self.channels;
        let count = (b * sp) as f64;
        let g = dy.data();
        let mut dx = Tensor::zeros(shape);
        let out = dx.data_mut();
        for ch in 0..c {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for n in 0..b {
                let base = (n * c + ch) * sp;
                for i in base..base + sp {
                    sum_dy += g[i];
                    sum_dy_xhat += g[i] * xhat[i];
                }
            }
            self.grad_beta[ch] += sum_dy;
            self.grad_gamma[ch] += sum_dy_xhat;
            let k = self.gamma[ch] * inv_std[ch] / count;
            for n in 0..b {
                let base = (n * c + ch) * sp;
                for i in base..base + sp {
                    out[i] = k * (count * g[i] - sum_dy - xhat[i] * sum_dy_xhat);
                }
            }
        }
        Ok(dx)
    }
}

impl MaxPool {
    pub fn new(size: (usize, usize)) -> Self {
        Self { size, cache: None }
    }

    fn forward(&mut self, x: Tensor) -> Result<Tensor> {
        let s = x.shape().to_vec();
        let (ph, pw) = self.size;
        if s.len() != 4 || s[2] < ph || s[3] < pw {
            return Err(Error::Shape {
                context: "max-pool input",
                expected: vec![0, 0, ph, pw],
                actual: s,
            });
        }
        let (b, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (ho, wo) = (h / ph, w / pw);
        let mut out = Tensor::zeros(vec![b, c, ho, wo]);
        let mut argmax = vec![0usize; b * c * ho * wo];
        let src = x.data();
        let dst = out.data_mut();
        for plane in 0..b * c {
            let ib = plane * h * w;
            let ob = plane * ho * wo;
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = f64::NEG_INFINITY;
                    let mut at = 0;
                    for i in 0..ph {
                        for j in 0..pw {
                            let idx = ib + (oy * ph + i) * w + ox * pw + j;
                            if src[idx] > best {
                                best = src[idx];
                                at = idx;
                            }
                        }
                    }
                    dst[ob + oy * wo + ox] = best;
                    argmax[ob + oy * wo + ox] = at;
                }
            }
        }
        self.cache = Some((argmax, s));
        Ok(out)
    }

    fn backward(&mut self, dy: Tensor) -> Result<Tensor> {
        let (argmax, shape) = self
            .cache
            .take()
            .ok_or_else(|| Error::InvalidArgument("max-pool backward without forward".into()))?;
        let mut dx = Tensor::zeros(shape);
        for (g, &at) in dy.data().iter().zip(&argmax) {
            dx.data_mut()[at] += g;
        }
        Ok(dx)
    }
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            inputs,
            outputs,
            weight: he_uniform(rng, inputs, inputs * outputs),
            bias: vec![0.0; outputs],
            grad_weight: vec![0.0; inputs * outputs],
            grad_bias: vec![0.0; outputs],
            input: None,
        }
    }

    fn forward(&mut self, x: Tensor) -> Result<Tensor> {
        let s = x.shape().to_vec();
        if s.len() != 2 || s[1] != self.inputs {
            return Err(Error::Shape {
                context: "dense input",
                expected: vec![s.first().copied().unwrap_or(0), self.inputs],
                actual: s,
            });
        }
        let b = s[0];
        let mut out = Tensor::zeros(vec![b, self.outputs]);
        for row in out.data_mut().chunks_exact_mut(self.outputs) {
            row.copy_from_slice(&self.bias);
        }
        gemm(b, self.inputs, self.outputs, x.data(), false, &self.weight, true, out.data_mut(), 1.0);
        self.input = Some(x);
        Ok(out)
    }

    fn backward(&mut self, dy: Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or_else(|| Error::InvalidArgument("dense backward without forward".into()))?;
        let b = x.batch();
        gemm(self.outputs, b, self.inputs, dy.data(), true, x.data(), false, &mut self.grad_weight, 1.0);
        for row in dy.data().chunks_exact(self.outputs) {
            for (gb, g) in self.grad_bias.iter_mut().zip(row) {
                *gb += g;
            }
        }
        let mut dx = Tensor::zeros(vec![b, self.inputs]);
        gemm(b, self.outputs, self.inputs, dy.data(), false, &self.weight, false, dx.data_mut(), 0.0);
        Ok(dx)
    }
}

impl Layer {
    pub fn from_spec(spec: &LayerSpec, rng: &mut ChaCha8Rng) -> Self {
        match *spec {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
            } => Layer::Conv(Conv::new(in_channels, out_channels, kernel, rng)),
            LayerSpec::Relu => Layer::Relu(None),
            LayerSpec::BatchNorm { channels } => Layer::BatchNorm(BatchNorm::new(channels)),
            LayerSpec::MaxPool { size } => Layer::MaxPool(MaxPool::new(size)),
            LayerSpec::Flatten => Layer::Flatten(None),
            LayerSpec::Dropout { rate } => Layer::Dropout(Dropout { rate, mask: None }),
            LayerSpec::Dense { inputs, outputs } => Layer::Dense(Dense::new(inputs, outputs, rng)),
        }
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv(c) => LayerSpec::Conv {
                in_channels: c.in_channels,
                out_channels: c.out_channels,
                kernel: c.kernel,
            },
            Layer::Relu(_) => LayerSpec::Relu,
            Layer::BatchNorm(b) => LayerSpec::BatchNorm { channels: b.channels },
            Layer::MaxPool(p) => LayerSpec::MaxPool { size: p.size },
            Layer::Flatten(_) => LayerSpec::Flatten,
            Layer::Dropout(d) => LayerSpec::Dropout { rate: d.rate },
            Layer::Dense(d) => LayerSpec::Dense {
                inputs: d.inputs,
                outputs: d.outputs,
            },
        }
    }

    pub fn forward(&mut self, x: Tensor, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Tensor> {
        match self {
            Layer::Conv(c) => c.forward(x),
            Layer::Relu(cache) => {
                let mut x = x;
                let mut mask = Vec::with_capacity(x.len());
                for v in x.data_mut() {
                    let on = *v > 0.0;
                    if !on {
                        *v = 0.0;
                    }
                    mask.push(on);
                }
                *cache = Some(mask);
                Ok(x)
            }
            Layer::BatchNorm(b) => b.forward(x, mode),
            Layer::MaxPool(p) => p.forward(x),
            Layer::Flatten(cache) => {
                let shape = x.shape().to_vec();
                let b = x.batch();
                let rest = x.len() / b.max(1);
                *cache = Some(shape);
                x.reshape(vec![b, rest])
            }
            Layer::Dropout(d) => {
                if mode == Mode::Infer || d.rate == 0.0 {
                    d.mask = None;
                    return Ok(x);
                }
                let keep = 1.0 - d.rate;
                let mut x = x;
                let mask: Vec<f64> = (0..x.len())
                    .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (v, m) in x.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                d.mask = Some(mask);
                Ok(x)
            }
            Layer::Dense(d) => d.forward(x),
        }
    }

    pub fn backward(&mut self, dy: Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(c) => c.backward(dy),
            Layer::Relu(cache) => {
                let mask = cache
                    .take()
                    .ok_or_else(|| Error::InvalidArgument("relu backward without forward".into()))?;
                let mut dy = dy;
                for (g, on) in dy.data_mut().iter_mut().zip(mask) {
                    if !on {
                        *g = 0.0;
                    }
                }
                Ok(dy)
            }
            Layer::BatchNorm(b) => b.backward(dy),
            Layer::MaxPool(p) => p.backward(dy),
            Layer::Flatten(cache) => {
                let shape = cache
                    .take()
                    .ok_or_else(|| Error::InvalidArgument("flatten backward without forward".into()))?;
                dy.reshape(shape)
            }
            Layer::Dropout(d) => match d.mask.take() {
                None => Ok(dy),
                Some(mask) => {
                    let mut dy = dy;
                    for (g, m) in dy.data_mut().iter_mut().zip(mask) {
                        *g *= m;
                    }
                    Ok(dy)
                }
            },
            Layer::Dense(d) => d.backward(dy),
        }
    }

    /// Trainable parameters with their gradients; the flag marks tensors that
    /// receive L2 weight decay (convolution and dense weights).
    pub fn params_mut(&mut self) -> Vec<(&mut Vec<f64>, &mut Vec<f64>, bool)> {
        match self {
            Layer::Conv(c) => vec![
                (&mut c.weight, &mut c.grad_weight, true),
                (&mut c.bias, &mut c.grad_bias, false),
            ],
            Layer::Dense(d) => vec![
                (&mut d.weight, &mut d.grad_weight, true),
                (&mut d.bias, &mut d.grad_bias, false),
            ],
            Layer::BatchNorm(b) => vec![
                (&mut b.gamma, &mut b.grad_gamma, false),
                (&mut b.beta, &mut b.grad_beta, false),
            ],
            _ => Vec::new(),
        }
    }

    /// Every stored array (parameters and running statistics), for
    /// serialization, in a fixed order.
    pub fn state(&self) -> Vec<(&'static str, &Vec<f64>)> {
        match self {
            Layer::Conv(c) => vec![("weight", &c.weight), ("bias", &c.bias)],
            Layer::Dense(d) => vec![("weight", &d.weight), ("bias", &d.bias)],
            Layer::BatchNorm(b) => vec![
                ("gamma", &b.gamma),
                ("beta", &b.beta),
                ("running_mean", &b.running_mean),
                ("running_var", &b.running_var),
            ],
            _ => Vec::new(),
        }
    }

    pub fn state_mut(&mut self) -> Vec<(&'static str, &mut Vec<f64>)> {
        match self {
            Layer::Conv(c) => vec![("weight", &mut c.weight), ("bias", &mut c.bias)],
            Layer::Dense(d) => vec![("weight", &mut d.weight), ("bias", &mut d.bias)],
            Layer::BatchNorm(b) => vec![
                ("gamma", &mut b.gamma),
                ("beta", &mut b.beta),
                ("running_mean", &mut b.running_mean),
                ("running_var", &mut b.running_var),
            ],
            _ => Vec::new(),
        }
    }

    pub fn zero_grad(&mut self) {
        for (_, g, _) in self.params_mut() {
            g.fill(0.0);
        }
    }

    /// Drop forward caches (used before cloning snapshots).
    pub fn clear_cache(&mut self) {
        match self {
            Layer::Conv(c) => c.input = None,
            Layer::Relu(cache) => *cache = None,
            Layer::BatchNorm(b) => b.cache = None,
            Layer::MaxPool(p) => p.cache = None,
            Layer::Flatten(cache) => *cache = None,
            Layer::Dropout(d) => d.mask = None,
            Layer::Dense(d) => d.input = None,
        }
    }
}

/// Row-wise softmax of `[batch, classes]` logits.
pub fn softmax(logits: &Tensor) -> Tensor {
    let k = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(k) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Mean cross-entropy of softmax probabilities and the fused gradient
/// `(probs - onehot) / batch` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor, Tensor)> {
    let s = logits.shape();
    if s.len() != 2 || s[0] != labels.len() {
        return Err(Error::Shape {
            context: "softmax cross-entropy",
            expected: vec![labels.len(), 0],
            actual: s.to_vec(),
        });
    }
    let (b, k) = (s[0], s[1]);
    let probs = softmax(logits);
    let mut grad = probs.clone();
    let mut loss = 0.0;
    for (n, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::InvalidArgument(format!("label {y} out of range for {k} classes")));
        }
        loss -= probs.data()[n * k + y].max(f64::MIN_POSITIVE).ln();
        grad.data_mut()[n * k + y] -= 1.0;
    }
    for g in grad.data_mut() {
        *g /= b as f64;
    }
    Ok((loss / b as f64, probs, grad))
}
