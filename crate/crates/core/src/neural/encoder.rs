use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{softmax_cross_entropy, Layer, LayerSpec, Mode};
use super::tensor::Tensor;
use crate::container::Container;
use crate::error::{Error, Result};
use crate::scaler::Standardizer;

pub const EMBEDDING_WIDTH: usize = 100;
/// (filters, kernel side) per convolution block.
pub const CONV2D_BLOCKS: [(usize, usize); 5] = [(16, 3), (16, 3), (32, 5), (32, 5), (32, 5)];
pub const CONV1D_BLOCKS: [(usize, usize); 3] = [(16, 3), (16, 3), (32, 3)];
const DEFAULT_DROPOUT: f64 = 0.3;
const INFER_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Conv2d,
    Conv1d,
    Dense,
}

/// Decide, along one axis, which convolution blocks are followed by a
/// halving pool. A block pools only if enough extent survives for every
/// remaining valid convolution; the last block pools whenever its output
/// is at least 2. Returns the flags and the final extent.
pub fn plan_pools(extent: usize, kernels: &[usize]) -> Result<(Vec<bool>, usize)> {
    let mut n = extent;
    let mut flags = Vec::with_capacity(kernels.len());
    for (i, &k) in kernels.iter().enumerate() {
        if n < k {
            return Err(Error::InvalidArgument(format!(
                "input extent {extent} is too small for the convolution stack"
            )));
        }
        n = n - k + 1;
        let needed = 1 + kernels[i + 1..].iter().map(|k| k - 1).sum::<usize>();
        let pool = n / 2 >= needed;
        if pool {
            n /= 2;
        }
        flags.push(pool);
    }
    Ok((flags, n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderArch {
    pub kind: EncoderKind,
    /// Per-sample input shape: `[c, h, w]`, `[1, 1, len]` or `[features]`.
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub embedding: usize,
}

impl EncoderArch {
    fn conv_stack(
        kind: EncoderKind,
        input_shape: Vec<usize>,
        blocks: &[(usize, usize)],
        two_d: bool,
    ) -> Result<Self> {
        let (c, h, w) = (input_shape[0], input_shape[1], input_shape[2]);
        let kernels: Vec<usize> = blocks.iter().map(|b| b.1).collect();
        let (pool_w, out_w) = plan_pools(w, &kernels)?;
        let (pool_h, out_h) = if two_d {
            plan_pools(h, &kernels)?
        } else {
            (vec![false; blocks.len()], h)
        };
        let mut layers = Vec::new();
        let mut channels = c;
        for (i, &(filters, k)) in blocks.iter().enumerate() {
            let kernel = if two_d { (k, k) } else { (1, k) };
            layers.push(LayerSpec::Conv {
                in_channels: channels,
                out_channels: filters,
                kernel,
            });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::BatchNorm { channels: filters });
            let size = (if pool_h[i] { 2 } else { 1 }, if pool_w[i] { 2 } else { 1 });
            if size != (1, 1) {
                layers.push(LayerSpec::MaxPool { size });
            }
            channels = filters;
        }
        let flat = channels * out_h * out_w;
        layers.extend([
            LayerSpec::Flatten,
            LayerSpec::Dropout { rate: DEFAULT_DROPOUT },
            LayerSpec::Dense {
                inputs: flat,
                outputs: EMBEDDING_WIDTH,
            },
            LayerSpec::Relu,
        ]);
        Ok(Self {
            kind,
            input_shape,
            layers,
            embedding: EMBEDDING_WIDTH,
        })
    }

    /// Image encoder over `[channels, side, side]` inputs.
    pub fn conv2d(channels: usize, side: usize) -> Result<Self> {
        Self::conv_stack(EncoderKind::Conv2d, vec![channels, side, side], &CONV2D_BLOCKS, true)
    }

    /// Signal encoder over one channel of `len` samples.
    pub fn conv1d(len: usize) -> Result<Self> {
        Self::conv_stack(EncoderKind::Conv1d, vec![1, 1, len], &CONV1D_BLOCKS, false)
    }

    /// Single fully connected layer over a feature vector.
    pub fn dense(inputs: usize) -> Self {
        Self {
            kind: EncoderKind::Dense,
            input_shape: vec![inputs],
            layers: vec![
                LayerSpec::Dropout { rate: DEFAULT_DROPOUT },
                LayerSpec::Dense {
                    inputs,
                    outputs: EMBEDDING_WIDTH,
                },
                LayerSpec::Relu,
            ],
            embedding: EMBEDDING_WIDTH,
        }
    }

    /// Width of the vector entering the embedding layer.
    pub fn flatten_width(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Dense { inputs, .. } => Some(*inputs),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn set_dropout(&mut self, rate: f64) {
        for l in &mut self.layers {
            if let LayerSpec::Dropout { rate: r } = l {
                *r = rate;
            }
        }
    }
}

/// A sequence of layers run front to back.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn from_specs(specs: &[LayerSpec], rng: &mut ChaCha8Rng) -> Self {
        Self {
            layers: specs.iter().map(|s| Layer::from_spec(s, rng)).collect(),
        }
    }

    pub fn forward(&mut self, mut x: Tensor, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Tensor> {
        for l in &mut self.layers {
            x = l.forward(x, mode, rng)?;
        }
        Ok(x)
    }

    pub fn backward(&mut self, mut dy: Tensor) -> Result<Tensor> {
        for l in self.layers.iter_mut().rev() {
            dy = l.backward(dy)?;
        }
        Ok(dy)
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
    }

    pub fn clear_cache(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    pub fn params_mut(&mut self) -> Vec<(&mut Vec<f64>, &mut Vec<f64>, bool)> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// `sum w^2` over decayed weights.
    pub fn weight_norm_sq(&mut self) -> f64 {
        self.params_mut()
            .into_iter()
            .filter(|p| p.2)
            .map(|(w, _, _)| w.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Trained encoder: body producing the embedding plus the softmax head used
/// only during training and per-branch evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderModel {
    pub arch: EncoderArch,
    pub classes: usize,
    pub body: Network,
    pub head: Network,
    pub standardizer: Option<Standardizer>,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    arch: EncoderArch,
    classes: usize,
    standardized: bool,
}

impl EncoderModel {
    pub fn new(arch: EncoderArch, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = Network::from_specs(&arch.layers, &mut rng);
        let head = Network::from_specs(
            &[LayerSpec::Dense {
                inputs: arch.embedding,
                outputs: classes,
            }],
            &mut rng,
        );
        Self {
            arch,
            classes,
            body,
            head,
            standardizer: None,
        }
    }

    /// Check per-sample shapes, standardize feature vectors and stack.
    pub fn prepare(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        for t in inputs {
            if t.shape() != self.arch.input_shape.as_slice() {
                return Err(Error::Shape {
                    context: "encoder input",
                    expected: self.arch.input_shape.clone(),
                    actual: t.shape().to_vec(),
                });
            }
        }
        match &self.standardizer {
            None => Tensor::stack(inputs),
            Some(s) => {
                let rows: Vec<Tensor> = inputs
                    .iter()
                    .map(|t| Tensor::new(t.shape().to_vec(), s.transform(t.data())?))
                    .collect::<Result<_>>()?;
                Tensor::stack(&rows.iter().collect::<Vec<_>>())
            }
        }
    }

    /// Data loss plus `(l2 / 2) * sum w^2`; leaves gradients (including the
    /// decay term) in every layer. `batch` must already be prepared.
    pub fn compute_gradients(
        &mut self,
        batch: Tensor,
        labels: &[usize],
        l2: f64,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Tensor)> {
        self.body.zero_grad();
        self.head.zero_grad();
        let emb = self.body.forward(batch, mode, rng)?;
        let logits = self.head.forward(emb, mode, rng)?;
        let (data_loss, probs, grad) = softmax_cross_entropy(&logits, labels)?;
        let demb = self.head.backward(grad)?;
        self.body.backward(demb)?;
        let mut penalty = 0.0;
        for net in [&mut self.body, &mut self.head] {
            for (w, g, decay) in net.params_mut() {
                if decay {
                    for (gi, wi) in g.iter_mut().zip(w.iter()) {
                        *gi += l2 * wi;
                        penalty += wi * wi;
                    }
                }
            }
        }
        Ok((data_loss + 0.5 * l2 * penalty, probs))
    }

    fn infer<F>(&self, inputs: &[Tensor], through_head: bool, mut f: F) -> Result<()>
    where
        F: FnMut(&[f64], usize),
    {
        let mut body = self.body.clone();
        let mut head = self.head.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for chunk in inputs.chunks(INFER_CHUNK) {
            let refs: Vec<&Tensor> = chunk.iter().collect();
            let mut out = body.forward(self.prepare(&refs)?, Mode::Infer, &mut rng)?;
            if through_head {
                out = head.forward(out, Mode::Infer, &mut rng)?;
            }
            let width = out.shape()[1];
            for row in out.data().chunks_exact(width) {
                f(row, width);
            }
        }
        Ok(())
    }

    /// Embeddings (infer mode) for each input.
    pub fn encode(&self, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(inputs.len());
        self.infer(inputs, false, |row, _| out.push(row.to_vec()))?;
        Ok(out)
    }

    /// Softmax-head logits (infer mode).
    pub fn logits(&self, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(inputs.len());
        self.infer(inputs, true, |row, _| out.push(row.to_vec()))?;
        Ok(out)
    }

    /// Softmax-head class predictions (ties go to the lowest class).
    pub fn predict(&self, inputs: &[Tensor]) -> Result<Vec<usize>> {
        Ok(self.logits(inputs)?.iter().map(|l| argmax(l)).collect())
    }

    pub fn to_container(&self) -> Result<Container> {
        let meta = serde_json::to_value(ModelMeta {
            arch: self.arch.clone(),
            classes: self.classes,
            standardized: self.standardizer.is_some(),
        })
        .map_err(|e| Error::Container(e.to_string()))?;
        let mut c = Container::new("encoder", meta);
        for (prefix, net) in [("body", &self.body), ("head", &self.head)] {
            for (i, layer) in net.layers.iter().enumerate() {
                for (name, data) in layer.state() {
                    c.push(format!("{prefix}.{i}.{name}"), vec![data.len()], data.clone());
                }
            }
        }
        if let Some(s) = &self.standardizer {
            c.push("scaler.mean", vec![s.dim()], s.mean.clone());
            c.push("scaler.scale", vec![s.dim()], s.scale.clone());
        }
        Ok(c)
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        let meta: ModelMeta =
            serde_json::from_value(c.meta.clone()).map_err(|e| Error::Container(e.to_string()))?;
        let mut model = Self::new(meta.arch, meta.classes, 0);
        if meta.standardized {
            let d = model.arch.input_shape.iter().product();
            model.standardizer = Some(Standardizer {
                mean: c.take("scaler.mean", d)?,
                scale: c.take("scaler.scale", d)?,
            });
        }
        for (prefix, net) in [("body", &mut model.body), ("head", &mut model.head)] {
            for (i, layer) in net.layers.iter_mut().enumerate() {
                for (name, data) in layer.state_mut() {
                    *data = c.take(&format!("{prefix}.{i}.{name}"), data.len())?;
                }
            }
        }
        if let Some(extra) = c.arrays.first() {
            return Err(Error::Container(format!("unexpected array {}", extra.name)));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container()?.write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::read(path, "encoder")?)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
